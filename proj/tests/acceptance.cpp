// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "surgctx/eval.hpp"
#include "surgctx/kernels.hpp"
#include "surgctx/mask_ops.hpp"
#include "surgctx/memory_net.hpp"
#include "surgctx/pipeline.hpp"
#include "surgctx/scene_synth.hpp"
#include "truth_tables.hpp"

namespace surgctx {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

FeatureMap random_map(std::mt19937_64& rng, int channels, int positions, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  FeatureMap m(channels, positions);
  for (int c = 0; c < channels; ++c) {
    for (double& x : m.channel(c)) x = d(rng);
  }
  return m;
}

double worst_column_sum_error(const Matrix& w) {
  double worst = 0.0;
  for (int i = 0; i < w.cols(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < w.rows(); ++j) sum += w(j, i);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Outcome kernel_oracles() {
  constexpr double kTol = 1e-9;
  constexpr double kSumTol = 1e-12;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<int> channels(1, 16), positions(1, 64);
  double aff = 0, norm = 0, read = 0, sums = 0;
  for (int t = 0; t < 1000; ++t) {
    const int c = channels(rng), nq = positions(rng), nm = positions(rng), cv = channels(rng);
    const FeatureMap q = random_map(rng, c, nq, 0.7);
    const FeatureMap m = random_map(rng, c, nm, 0.7);
    const FeatureMap v = random_map(rng, cv, nm, 1.0);
    const Matrix s_ref = oracle::affinity(q, m);
    const Matrix w_ref = oracle::softmax_ld(s_ref);
    const FeatureMap r_ref = oracle::readout(v, w_ref);
    for (bool parallel : {true, false}) {
      const Matrix s = parallel ? kernels::affinity(q, m) : kernels::serial::affinity(q, m);
      const Matrix w = parallel ? kernels::normalize_affinity(s_ref) : kernels::serial::normalize_affinity(s_ref);
      const FeatureMap r = parallel ? kernels::readout(v, w_ref) : kernels::serial::readout(v, w_ref);
      aff = std::max(aff, oracle::max_abs_diff(s.data(), s_ref.data()));
      norm = std::max(norm, oracle::max_abs_diff(w.data(), w_ref.data()));
      read = std::max(read, oracle::max_abs_diff(r.matrix().data(), r_ref.matrix().data()));
      sums = std::max(sums, worst_column_sum_error(w));
    }
  }
  // A subset against 50-digit arithmetic.
  double precise = 0;
  for (int t = 0; t < 20; ++t) {
    const Matrix s = random_map(rng, positions(rng), positions(rng), 4.0).matrix();
    precise = std::max(precise, oracle::max_abs_diff(kernels::normalize_affinity(s).data(),
                                                     oracle::softmax(s).data()));
  }
  // Overflow: raw scores of +-1e6 and features of +-1e6.
  bool finite = true;
  for (int t = 0; t < 20; ++t) {
    Matrix s(positions(rng), positions(rng));
    std::bernoulli_distribution sign(0.5);
    for (double& x : s.data()) x = sign(rng) ? 1e6 : -1e6;
    for (bool parallel : {true, false}) {
      const Matrix w = parallel ? kernels::normalize_affinity(s) : kernels::serial::normalize_affinity(s);
      finite = finite && all_finite(w.data()) && worst_column_sum_error(w) <= kSumTol;
    }
    const FeatureMap q = random_map(rng, 4, 16, 1e6);
    const FeatureMap m = random_map(rng, 4, 16, 1e6);
    const FeatureMap v = random_map(rng, 2, 16, 1.0);
    const FeatureMap r = kernels::readout(v, kernels::normalize_affinity(kernels::affinity(q, m)));
    finite = finite && all_finite(r.matrix().data());
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = aff <= kTol && norm <= kTol && read <= kTol && precise <= kTol && sums <= kSumTol &&
           finite && secs < 10.0;
  o.detail = "affinity " + fmt("%.2e", aff) + ", softmax " + fmt("%.2e", norm) + " (50-digit " +
             fmt("%.2e", precise) + "), readout " + fmt("%.2e", read) + " [tol 1e-9]; column sums " +
             fmt("%.2e", sums) + " [tol 1e-12]; overflow finite " + (finite ? "yes" : "no") + "; " +
             fmt("%.2f s", secs) + " [< 10 s]";
  return o;
}

// ---------------------------------------------------------------------------

constexpr int kStride = 20;
constexpr std::size_t kCapacity = 3;

std::vector<Worker> gt_workers(const SyntheticVideo& v, const Encoder& enc, InitMode mode,
                               std::optional<std::size_t> capacity) {
  std::vector<Worker> out;
  for (std::size_t i = 0; i < v.classes.size(); ++i) {
    if (v.masks[i][0].none()) continue;
    out.push_back({v.classes[i], init_bank({mode, v.frames[0], v.masks[i][0]}, enc,
                                           BankOptions{capacity, {}})});
  }
  return out;
}

Outcome batching_invariance() {
  Script s = builtin_script("suturing");
  s.frames = 100;
  const SyntheticVideo v = generate(s, 11);
  const ToyEncoder enc(ToyEncoder::Options{kStride});
  const InMemoryFrameSource source(v.frames);
  std::vector<std::map<std::pair<ObjectClass, int>, BinaryMask>> runs;
  std::vector<std::vector<double>> ious;  // [size][class]
  for (int bs : {1, 5, 10, 25, 100}) {
    std::vector<Worker> workers = gt_workers(v, enc, InitMode::GtFF, kCapacity);
    std::map<std::pair<ObjectClass, int>, BinaryMask> log;
    PipelineOptions po;
    po.start = 1;
    po.on_mask = [&log](const Worker& w, const Frame& f, const BinaryMask& m) { log.insert_or_assign({w.cls, f.index}, m); };
    run_pipeline(source, BatchConfig{bs}, workers, enc, default_rules(s.task), po);
    std::vector<double> per_class;
    for (std::size_t i = 0; i < v.classes.size(); ++i) {
      std::vector<BinaryMask> pred, gt;
      for (int f = 1; f < s.frames; ++f) {
        auto it = log.find({v.classes[i], f});
        if (it == log.end()) continue;
        pred.push_back(it->second);
        gt.push_back(v.masks[i][f]);
      }
      per_class.push_back(class_mean_iou(pred, gt).mean);
    }
    ious.push_back(per_class);
    runs.push_back(std::move(log));
  }
  bool identical = !runs[0].empty();
  for (const auto& r : runs) identical = identical && r == runs[0];
  double worst_std = 0.0;
  for (std::size_t c = 0; c < ious[0].size(); ++c) {
    double mean = 0.0;
    for (const auto& row : ious) mean += row[c];
    mean /= ious.size();
    double var = 0.0;
    for (const auto& row : ious) var += (row[c] - mean) * (row[c] - mean);
    worst_std = std::max(worst_std, std::sqrt(var / ious.size()));
  }
  Outcome o;
  o.pass = identical && worst_std == 0.0;
  o.detail = std::string("masks ") + (identical ? "bit-identical" : "DIFFER") + " across sizes {1,5,10,25,100} (" +
             std::to_string(runs[0].size()) + " masks each); max per-class IOU std " +
             fmt("%.3g", worst_std) + " [= 0]";
  return o;
}

Outcome memory_policy() {
  Script s = builtin_script("suturing");
  s.frames = 25;
  const SyntheticVideo v = generate(s, 2);
  const ToyEncoder enc(ToyEncoder::Options{kStride});
  std::vector<Worker> workers = gt_workers(v, enc, InitMode::TrainFF, std::nullopt);
  PipelineOptions po;
  po.start = 0;
  run_pipeline(InMemoryFrameSource(v.frames), BatchConfig{10}, workers, enc, default_rules(s.task), po);
  const std::vector<int> want = {kExternalFrameIndex, 0, 5, 10, 15, 20};
  bool ok = !workers.empty();
  std::string got;
  for (const Worker& w : workers) {
    ok = ok && w.bank.frame_indices() == want;
  }
  for (int f : workers.front().bank.frame_indices()) got += (got.empty() ? "" : ",") + std::to_string(f);
  return {ok, std::to_string(workers.size()) + " banks after frames 0-24: {" + got +
                  "} [want {-1,0,5,10,15,20}, -1 = initial pair]"};
}

Outcome geometry_oracles() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> off(-22.0, 22.0);
  std::uniform_int_distribution<int> verts(4, 12);
  double worst_dist = 0.0, worst_rel = 0.0;
  int overlapping = 0, area_fail = 0;
  for (int t = 0; t < 200; ++t) {
    const Point c{50, 50};
    const PolygonSet a(ObjectClass::LeftGrasper, {Polygon(oracle::star_ring(rng, c, verts(rng), 4, 15))});
    const PolygonSet b(ObjectClass::Needle,
                       {Polygon(oracle::star_ring(rng, {c.x + off(rng), c.y + off(rng)}, verts(rng), 4, 15))});
    worst_dist = std::max(worst_dist, std::abs(set_distance(a, b) - oracle::set_distance(a, b)));
    const double want = oracle::intersection_area(a, b, 0.02);
    const double got = set_intersection_area(a, b);
    if (want > 0) {
      ++overlapping;
      worst_rel = std::max(worst_rel, std::abs(got - want) / want);
    }
    // Slivers thinner than the oracle grid may be missed by it.
    if (std::abs(got - want) > 0.02 * want + 1e-2) ++area_fail;
  }
  int rdp_fail = 0;
  for (int t = 0; t < 200; ++t) {
    const auto ring = oracle::star_ring(rng, {100, 100}, 60, 20, 60);
    const double eps = 0.5 + t % 4;
    const auto out = rdp_simplify(ring, eps);
    std::size_t k = 0;
    bool ok = out.front() == ring.front();
    for (const Point& p : ring) {
      if (k < out.size() && p == out[k]) ++k;
      ok = ok && oracle::dist_to_ring(p, out) <= eps + 1e-12;
    }
    if (!ok || k != out.size()) ++rdp_fail;
  }
  Outcome o;
  o.pass = worst_dist <= 1e-3 && area_fail == 0 && rdp_fail == 0;
  o.detail = "200 pairs: max distance error " + fmt("%.2e", worst_dist) + " px [1e-3]; intersection max rel error " +
             fmt("%.4f", worst_rel) + " over " + std::to_string(overlapping) + " overlapping pairs [0.02], " +
             std::to_string(area_fail) + " failures; RDP bound violated on " + std::to_string(rdp_fail) + "/200 rings";
  return o;
}

Outcome truth_tables() {
  int cases = 0, bad = 0;
  std::string first;
  for (const truth::TableResult& r : truth::all_tables()) {
    cases += r.cases;
    bad += r.mismatches;
    if (r.mismatches && first.empty()) first = r.name + ": " + r.first_failure;
  }
  return {bad == 0 && cases > 0, std::to_string(truth::all_tables().size()) + " tables, " +
                                     std::to_string(cases) + " cases, " + std::to_string(bad) +
                                     " mismatches" + (first.empty() ? "" : " (" + first + ")")};
}

// ---------------------------------------------------------------------------

struct TaskRun {
  std::string name;
  ContextIou clean;
  ContextIou eroded;
  bool has_needle = false;
  int disagreements = 0;
  int far_from_event = 0;
};

TaskRun run_task(const std::string& name) {
  const SceneGenerator gen(builtin_script(name), 1);
  const Script& s = gen.script();
  const RuleSet& rules = default_rules(s.task);
  const Timeline gt = gen.context();
  Timeline clean(1, 30.0), eroded(1, 30.0);
  TaskRun r;
  r.name = name;
  for (int f = 0; f < gen.frame_count(); ++f) {
    SynthFrame sf = gen.render(f);
    const ContextState c = infer_context(gen.scene(sf), rules);
    clean.append(f, c);
    const auto& want = gt.entries()[f].state.codes;
    for (int st = 0; st < kNumStates; ++st) {
      if (c.codes[st] == want[st]) continue;
      ++r.disagreements;
      bool near = false;
      for (const Event& e : s.events) near = near || (e.state == st && std::abs(e.frame - f) <= 1);
      if (!near) ++r.far_from_event;
    }
    for (ClassMask& cm : sf.masks) {
      if (cm.cls != ObjectClass::Needle) continue;
      r.has_needle = true;
      cm.mask = erode(cm.mask, 2);
    }
    eroded.append(f, infer_context(gen.scene(sf), rules));
  }
  r.clean = context_state_iou(clean, gt);
  r.eroded = context_state_iou(eroded, gt);
  return r;
}

std::string states(const ContextIou& c) {
  std::string s;
  for (double x : c.per_state) s += (s.empty() ? "" : " ") + fmt("%.3f", x);
  return s;
}

Outcome end_to_end(const std::vector<TaskRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const TaskRun& r : runs) {
    const double floor = r.name == "suturing" ? 0.95 : 0.90;
    double worst = 1.0;
    for (double x : r.clean.per_state) worst = std::min(worst, x);
    ok = ok && worst >= floor && r.far_from_event == 0;
    detail += (detail.empty() ? "" : "; ") + r.name + " [" + states(r.clean) + "] >= " + fmt("%.2f", floor) +
              ", " + std::to_string(r.disagreements) + " disagreements (" + std::to_string(r.far_from_event) +
              " beyond +-1 frame of an event)";
  }
  return {ok, detail};
}

Outcome degraded_needle(const std::vector<TaskRun>& runs) {
  bool ok = false;
  std::string detail;
  for (const TaskRun& r : runs) {
    if (!r.has_needle) continue;
    const double needle_drop = r.clean.per_state[4] - r.eroded.per_state[4];
    double contact_drop = 0.0;
    for (int s : {1, 3}) contact_drop = std::max(contact_drop, r.clean.per_state[s] - r.eroded.per_state[s]);
    const bool pass = needle_drop > 0.05 && contact_drop < needle_drop;
    ok = (detail.empty() || ok) && pass;
    detail += (detail.empty() ? "" : "; ") + r.name + ": S5 drop " + fmt("%.3f", needle_drop) +
              " [> 0.05], max contact drop " + fmt("%.3f", contact_drop) + " [< S5 drop]";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------

Outcome runtime() {
  Script s = builtin_script("suturing");
  s.frames = 151;
  const SyntheticVideo v = generate(s, 1);
  const ToyEncoder enc(ToyEncoder::Options{kStride});
  const InMemoryFrameSource source(v.frames);
  const std::vector<int> sizes = {5, 10, 15, 20, 25};
  // Rounds interleave sizes so drift on a shared core hits every size alike.
  constexpr int kRounds = 3;
  std::vector<std::vector<double>> totals(sizes.size());
  std::vector<double> max_ms(sizes.size(), 0.0);
  std::size_t n_workers = 0;
  for (int round = 0; round < kRounds; ++round) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const int bs = sizes[i];
      std::vector<Worker> workers = gt_workers(v, enc, InitMode::GtFF, kCapacity);
      n_workers = workers.size();
      PipelineOptions po;
      po.start = 1;
      const RunResult r = run_pipeline(source, BatchConfig{bs}, workers, enc, default_rules(s.task), po);
      // Complete windows only: the trailing partial one is shorter.
      for (const StageTiming& t : r.timings) {
        if (t.last_frame - t.first_frame + 1 != bs) continue;
        totals[i].push_back(t.total_ms);
        max_ms[i] = std::max(max_ms[i], t.total_ms);
      }
    }
  }
  std::vector<double> xs, ys;
  double batch10 = 0.0, batch10_max = 0.0;
  std::string per;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::vector<double>& t = totals[i];
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / t.size();
    std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
    const double median = t[t.size() / 2];
    xs.push_back(sizes[i]);
    ys.push_back(median);
    per += (per.empty() ? "" : " ") + std::to_string(sizes[i]) + ":" + fmt("%.1f", mean) + "/" + fmt("%.1f", median);
    if (sizes[i] == 10) {
      batch10 = mean;
      batch10_max = max_ms[i];
    }
  }
  const double n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k] / n;
    my += ys[k] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0.0;
  Outcome o;
  o.pass = batch10 < BatchConfig{10}.deadline_ms() && r2 > 0.95;
  o.detail = std::to_string(n_workers) + " workers, stride " + std::to_string(kStride) + ", capacity " +
             std::to_string(kCapacity) + ": batch 10 mean " + fmt("%.1f", batch10) + " ms (max " +
             fmt("%.1f", batch10_max) + ") [< 333.3]; mean/median ms by size {" + per + "}, R^2 of medians " + fmt("%.4f", r2) +
             " [> 0.95]";
  return o;
}

Outcome eval_self_consistency() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 200), code(0, 3);
  std::bernoulli_distribution flip(0.15);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    Timeline tl(10);
    std::array<int, kNumStates> cur{};
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      for (int& c : cur) {
        if (flip(rng)) c = code(rng);
      }
      tl.append(10 * k, ContextState{Task::Suturing, cur});
    }
    const ContextIou r = context_state_iou(tl, tl);
    bool ok = r.overall == 1.0;
    for (double x : r.per_state) ok = ok && x == 1.0;
    if (!ok) ++bad;
  }
  std::vector<BinaryMask> masks;
  std::bernoulli_distribution on(0.3);
  for (int k = 0; k < 20; ++k) {
    BinaryMask m(32, 24);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 32; ++x) m.set(x, y, on(rng));
    }
    masks.push_back(m);
  }
  masks.push_back(BinaryMask(32, 24));
  const double self = class_mean_iou(masks, masks).mean;
  return {bad == 0 && self == 1.0, std::to_string(100 - bad) + "/100 timelines score 1.0; class IOU of 21 masks vs itself " +
                                       fmt("%.6f", self)};
}

}  // namespace
}  // namespace surgctx

int main() {
  using namespace surgctx;
  int failures = 0;
  auto report = [&failures](const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    const Outcome o = fn();
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s  (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };
  report("kernel-oracles", kernel_oracles);
  report("batching-invariance", batching_invariance);
  report("memory-policy", memory_policy);
  report("geometry-oracles", geometry_oracles);
  report("rule-truth-tables", truth_tables);
  // Both scene criteria share one render pass per task.
  const auto scenes_t0 = Clock::now();
  std::vector<TaskRun> runs;
  for (const char* name : {"suturing", "needle_passing", "knot_tying"}) runs.push_back(run_task(name));
  const std::string scenes_time = fmt("; shared scene pass %.1f s", seconds_since(scenes_t0));
  report("end-to-end-context", [&] {
    Outcome o = end_to_end(runs);
    o.detail += scenes_time;
    return o;
  });
  report("degraded-needle-masks", [&runs] { return degraded_needle(runs); });
  report("runtime", runtime);
  report("eval-self-consistency", eval_self_consistency);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
