#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "surgctx/context_engine.hpp"
#include "surgctx/dataset.hpp"
#include "surgctx/error.hpp"
#include "surgctx/eval.hpp"
#include "surgctx/image_io.hpp"
#include "surgctx/mask_ops.hpp"
#include "surgctx/pipeline.hpp"
#include "surgctx/report.hpp"
#include "surgctx/run_config.hpp"
#include "surgctx/scene_synth.hpp"

namespace surgctx::cli {

namespace fs = std::filesystem;

namespace {

// Bench defaults sized for the runtime target on a single desktop core.
constexpr int kBenchStride = 20;
constexpr std::size_t kBenchCapacity = 3;
constexpr int kBenchFrames = 151;

struct Flags {
  std::string config;
  std::string task;
  std::string init_mode;
  std::string init_image;
  std::string init_mask;
  std::string rules;
  int batch_size = 0;
  double hold = 0.0;
  double open_px = 0.0;
  double min_area = 0.0;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string input;
  std::string out;
  int stride = 0;
  std::size_t capacity = 0;
  std::string features_dir;
  bool serial = false;
  bool strict = false;
  bool no_jaws = false;
  std::string script = "suturing";
  int frames = 0;
  std::vector<int> sizes;
  std::string pred;
  std::string gt;
};

struct Given {
  const CLI::App* app;
  bool operator()(const std::string& name) const {
    return app->get_option_no_throw(name) != nullptr && app->count(name) > 0;
  }
};

void add_config_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "RunConfig JSON; flags override it");
  sub->add_option("--task", f.task, "suturing | needle_passing | knot_tying");
  sub->add_option("--hold-threshold", f.hold, "grasp distance threshold (px)");
  sub->add_option("--open-threshold", f.open_px, "jaw separation above which a grasper is open (px)");
  sub->add_option("--min-area", f.min_area, "polygon / loop area threshold (px^2)");
  sub->add_option("--rules", f.rules, "RuleSet JSON replacing the task defaults");
}

void add_segmentation_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--init-mode", f.init_mode, "train-ff | deeplab-ff | gt-ff");
  sub->add_option("--init-image", f.init_image, "first-frame image for train-ff / deeplab-ff");
  sub->add_option("--init-mask", f.init_mask, "label PNG (0-6) or directory of <class>.png masks");
  sub->add_option("--batch-size", f.batch_size, "frames per window");
  sub->add_option("--stride", f.stride, "toy encoder stride");
  sub->add_option("--bank-capacity", f.capacity, "memory bank capacity (>= 2)");
  sub->add_option("--features-dir", f.features_dir, "use precomputed keys from this directory");
  sub->add_option("--seed", f.seed, "seed recorded in the config");
  sub->add_flag("--serial", f.serial, "run workers one after another");
}

RunConfig bind_config(const Flags& f, const Given& given) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (given("--task")) {
    auto t = parse_task(f.task);
    if (!t) throw DataError("unknown task '" + f.task + "'");
    c.task = *t;
  }
  if (given("--init-mode")) {
    auto m = parse_init_mode(f.init_mode);
    if (!m) throw DataError("unknown init mode '" + f.init_mode + "'");
    c.init_mode = *m;
  }
  if (given("--init-image")) c.init_image = f.init_image;
  if (given("--init-mask")) c.init_mask = f.init_mask;
  if (given("--rules")) c.rules_path = f.rules;
  if (given("--hold-threshold")) c.thresholds.hold = f.hold;
  if (given("--open-threshold")) c.thresholds.open_px = f.open_px;
  if (given("--min-area")) c.thresholds.area = f.min_area;
  if (given("--batch-size")) c.batch.batch_size = f.batch_size;
  if (given("--stride")) c.stride = f.stride;
  if (given("--bank-capacity")) c.bank_capacity = f.capacity;
  if (given("--features-dir")) {
    c.encoder = EncoderKind::ExternalFeatures;
    c.features_dir = f.features_dir;
  }
  if (given("--seed")) c.seed = f.seed;
  if (given("--input")) c.input = f.input;
  if (given("--out")) c.output = f.out;
  if (c.batch.batch_size <= 0) throw DataError("batch size must be positive");
  if (c.stride <= 0) throw DataError("stride must be positive");
  return c;
}

std::unique_ptr<Encoder> make_encoder(const RunConfig& c) {
  if (c.encoder == EncoderKind::ExternalFeatures) {
    return std::make_unique<ExternalFeatureEncoder>(c.features_dir, c.stride);
  }
  return std::make_unique<ToyEncoder>(ToyEncoder::Options{c.stride, 40.0, 4.0});
}

SceneOptions scene_options(const RuleSet& rules) {
  SceneOptions o;
  o.min_area = rules.thresholds().area;
  return o;
}

Manifest manifest_or_default(const fs::path& trial) {
  if (fs::exists(trial / "manifest.txt")) return read_manifest(trial);
  return Manifest{};
}

// Initial masks for every class, keyed by class. Absent entries mean the
// class has no mask in the init source.
std::map<ObjectClass, BinaryMask> load_init_masks(const std::string& spec,
                                                  const std::vector<ObjectClass>& classes) {
  std::map<ObjectClass, BinaryMask> out;
  if (fs::is_directory(spec)) {
    for (ObjectClass c : classes) {
      const fs::path p = fs::path(spec) / (std::string(directory_name(c)) + ".png");
      if (fs::exists(p)) out.emplace(c, read_mask(p));
    }
    return out;
  }
  if (!fs::exists(spec)) throw DataError("init mask " + spec + " does not exist");
  const LabelFrame labels = read_label_frame(spec);
  for (ObjectClass c : classes) out.emplace(c, split_label(labels, c));
  return out;
}

struct InitSetup {
  Frame frame;
  std::map<ObjectClass, BinaryMask> masks;
  std::size_t start = 0;  // first source position the pipeline segments
};

InitSetup prepare_init(const RunConfig& c, const DirectoryFrameSource& source,
                       const std::vector<ObjectClass>& classes) {
  InitSetup s{source.frame(0), {}, 1};
  switch (c.init_mode) {
    case InitMode::GtFF: {
      if (!c.init_mask.empty()) {
        s.masks = load_init_masks(c.init_mask, classes);
      } else {
        for (ObjectClass cls : classes) {
          const fs::path p = mask_path(c.input, cls, s.frame.index);
          if (fs::exists(p)) s.masks.emplace(cls, read_mask(p));
        }
      }
      if (s.masks.empty()) {
        throw DataError("gt-ff needs ground-truth masks for frame " +
                        std::to_string(s.frame.index) + " under " + c.input +
                        "/masks/<class>/, or --init-mask");
      }
      s.start = 1;
      break;
    }
    case InitMode::DeeplabFF: {
      if (c.init_mask.empty()) {
        throw DataError(
            "deeplab-ff needs --init-mask: the first frame segmented by a frame-level model");
      }
      if (!c.init_image.empty()) s.frame.image = read_image(c.init_image);
      s.masks = load_init_masks(c.init_mask, classes);
      s.start = 1;
      break;
    }
    case InitMode::TrainFF: {
      if (c.init_image.empty() || c.init_mask.empty()) {
        throw DataError(
            "train-ff needs --init-image and --init-mask: a labelled frame from the training set");
      }
      s.frame = Frame{kExternalFrameIndex, read_image(c.init_image)};
      s.masks = load_init_masks(c.init_mask, classes);
      s.start = 0;
      break;
    }
  }
  return s;
}

void write_timing_csv(const fs::path& path, const std::vector<StageTiming>& timings) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "first_frame,last_frame,segmentation_ms,segmentation_sum_ms,context_ms,total_ms,"
         "deadline_met,failed\n";
  out.setf(std::ios::fixed);
  out.precision(3);
  for (const StageTiming& t : timings) {
    out << t.first_frame << ',' << t.last_frame << ',' << t.segmentation_ms << ','
        << t.segmentation_sum_ms << ',' << t.context_ms << ',' << t.total_ms << ','
        << (t.deadline_met ? 1 : 0) << ',' << (t.failed ? 1 : 0) << '\n';
  }
}

std::vector<Worker> make_workers(const InitSetup& init, const std::vector<ObjectClass>& classes,
                                 const Encoder& enc, const RunConfig& c) {
  BankOptions bo;
  bo.capacity = c.bank_capacity;
  std::vector<Worker> workers;
  for (ObjectClass cls : classes) {
    auto it = init.masks.find(cls);
    if (it == init.masks.end() || it->second.count() == 0) {
      std::cerr << "warning: no initial mask for " << directory_name(cls)
                << "; it is treated as absent\n";
      continue;
    }
    workers.push_back({cls, init_bank({c.init_mode, init.frame, it->second}, enc, bo)});
  }
  return workers;
}

int cmd_segment(const RunConfig& c, bool serial) {
  if (c.input.empty() || c.output.empty()) throw DataError("segment needs --input and --out");
  const fs::path in(c.input);
  const fs::path out(c.output);
  const DirectoryFrameSource source(in / "frames");
  const auto classes = effective_classes(c);
  const RuleSet rules = effective_rules(c);
  const auto enc = make_encoder(c);
  const InitSetup init = prepare_init(c, source, classes);
  std::vector<Worker> workers = make_workers(init, classes, *enc, c);

  for (ObjectClass cls : classes) fs::create_directories(mask_dir(out, cls));
  // The init frame's masks are the given ones.
  if (init.start == 1) {
    for (const Worker& w : workers) {
      write_mask(mask_path(out, w.cls, init.frame.index), init.masks.at(w.cls));
    }
  }

  PipelineOptions po;
  po.parallel = !serial;
  po.start = init.start;
  po.scene = scene_options(rules);
  po.on_mask = [&out](const Worker& w, const Frame& f, const BinaryMask& m) {
    write_mask(mask_path(out, w.cls, f.index), m);
  };
  const RunResult r = run_pipeline(source, c.batch, workers, *enc, rules, po);

  Manifest m = manifest_or_default(in);
  m.task = c.task;
  m.video_rate = c.batch.source_rate;
  write_manifest(out, m);
  write_timing_csv(out / "timing.csv", r.timings);
  write_timeline(out / "window_context.csv", r.timeline);

  std::size_t failed = 0;
  for (const StageTiming& t : r.timings) {
    if (t.failed) {
      ++failed;
      std::cerr << "warning: window " << t.first_frame << "-" << t.last_frame
                << " failed: " << t.error << "\n";
    }
  }
  std::cout << "segmented " << source.size() << " frames for " << workers.size()
            << " classes into " << out.string() << "\n";
  return failed == 0 ? kOk : kDataError;
}

int cmd_context(const RunConfig& c, std::optional<double> rate, bool use_jaws) {
  if (c.input.empty() || c.output.empty()) throw DataError("context needs --input and --out");
  const fs::path in(c.input);
  const Manifest man = manifest_or_default(in);
  const double out_rate = rate.value_or(man.context_rate);
  if (!(out_rate > 0.0)) throw DataError("rate must be positive");
  const double ratio = man.video_rate / out_rate;
  const int step = static_cast<int>(std::lround(ratio));
  if (step < 1 || std::abs(ratio - step) > 1e-9) {
    throw DataError("context rate must divide the video rate " + std::to_string(man.video_rate));
  }

  const auto classes = effective_classes(c);
  const RuleSet rules = effective_rules(c);
  std::vector<int> frames = fs::exists(in / "frames") ? list_frames(in) : std::vector<int>{};
  std::map<ObjectClass, std::set<int>> available;
  for (ObjectClass cls : classes) {
    const auto idx = list_masks(in, cls);
    available[cls] = {idx.begin(), idx.end()};
    if (idx.empty()) {
      std::cerr << "warning: no " << directory_name(cls) << " masks in " << in.string()
                << "; the object is treated as absent\n";
    }
    frames.insert(frames.end(), idx.begin(), idx.end());
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  if (frames.empty() && man.frames > 0) {
    for (int f = 0; f < man.frames; ++f) frames.push_back(f);
  }
  if (frames.empty()) throw DataError(in.string() + " has no frames or masks");

  JawTable jaws;
  if (use_jaws && fs::exists(in / "jaws.csv")) jaws = read_jaws_csv(in / "jaws.csv");

  const SceneOptions so = scene_options(rules);
  Timeline t(step, man.video_rate);
  std::size_t missing = 0;
  for (int f = frames.front(); f <= frames.back(); f += step) {
    std::vector<ClassMask> masks;
    for (ObjectClass cls : classes) {
      if (available[cls].count(f)) {
        masks.push_back({cls, read_mask(mask_path(in, cls, f))});
      } else if (!available[cls].empty()) {
        ++missing;
      }
    }
    Scene scene = build_scene(f, masks, so);
    if (auto it = jaws.find(f); it != jaws.end()) scene.jaws = it->second;
    t.append(f, infer_context(scene, rules));
  }
  if (missing > 0) {
    std::cerr << "warning: " << missing << " class masks missing at sampled frames\n";
  }
  write_timeline(c.output, t);
  std::cout << "wrote " << t.size() << " context samples at " << t.sample_rate() << " Hz to "
            << c.output << "\n";
  return kOk;
}

Timeline load_context(const fs::path& p, Task task) {
  if (fs::is_directory(p)) {
    const Manifest m = manifest_or_default(p);
    return read_timeline(p / "context.csv", task, m.context_step(), m.video_rate);
  }
  return read_timeline(p, task, 10);
}

int cmd_eval(const std::string& pred, const std::string& gt, const RunConfig& c) {
  const fs::path pp(pred);
  const fs::path gp(gt);
  if (!fs::exists(pp)) throw DataError(pred + " does not exist");
  if (!fs::exists(gp)) throw DataError(gt + " does not exist");
  Metrics metrics;

  if (fs::is_directory(pp) && fs::is_directory(gp)) {
    for (ObjectClass cls : kAllClasses) {
      const auto gi = list_masks(gp, cls);
      if (gi.empty()) continue;
      const auto pi = list_masks(pp, cls);
      if (pi.size() != gi.size() || !std::equal(pi.begin(), pi.end(), gi.begin())) {
        throw DataError(std::string(directory_name(cls)) + ": prediction has " +
                        std::to_string(pi.size()) + " masks, ground truth " +
                        std::to_string(gi.size()) + " (frame numbers must match)");
      }
      std::vector<BinaryMask> pm;
      std::vector<BinaryMask> gm;
      for (int f : gi) {
        pm.push_back(read_mask(mask_path(pp, cls, f)));
        gm.push_back(read_mask(mask_path(gp, cls, f)));
      }
      metrics.classes.push_back({std::string(abbreviation(cls)), class_mean_iou(pm, gm)});
    }
  }

  const bool pred_ctx = fs::is_regular_file(pp) || fs::exists(pp / "context.csv");
  const bool gt_ctx = fs::is_regular_file(gp) || fs::exists(gp / "context.csv");
  if (pred_ctx && gt_ctx) {
    Task task = c.task;
    if (fs::is_directory(gp) && fs::exists(gp / "manifest.txt")) task = read_manifest(gp).task;
    const Timeline g = load_context(gp, task);
    Timeline p = load_context(pp, task);
    if (g.empty()) throw DataError("ground-truth context is empty");
    if (p.frame_step() != g.frame_step() || p.first_frame() != g.first_frame() ||
        p.size() != g.size()) {
      if (p.video_rate() != g.video_rate()) throw DataError("context files use different video rates");
      p = sample_at(p, g.first_frame(), g.frame_step(), g.size());
    }
    metrics.context = context_state_iou(p, g);
  }
  if (metrics.classes.empty() && !metrics.context) {
    throw DataError("nothing to compare: no shared masks or context files");
  }

  const Report r = emit_report(metrics);
  std::cout << r.text;
  if (!c.output.empty()) {
    const fs::path out(c.output);
    fs::create_directories(out);
    std::ofstream(out / "report.txt") << r.text;
    std::ofstream(out / "class_iou.csv") << r.class_csv;
    std::ofstream(out / "context_iou.csv") << r.context_csv;
  }
  return kOk;
}

int cmd_bench(RunConfig c, const Flags& f, const Given& given) {
  if (!given("--stride") && f.config.empty()) c.stride = kBenchStride;
  if (!given("--bank-capacity") && f.config.empty()) c.bank_capacity = kBenchCapacity;
  c.init_mode = InitMode::GtFF;

  std::vector<Frame> frames;
  std::vector<ObjectClass> classes;
  std::map<ObjectClass, BinaryMask> init_masks;
  if (!c.input.empty()) {
    const DirectoryFrameSource source(fs::path(c.input) / "frames");
    for (std::size_t i = 0; i < source.size(); ++i) frames.push_back(source.frame(i));
    classes = effective_classes(c);
    for (ObjectClass cls : classes) {
      const fs::path p = mask_path(c.input, cls, frames.front().index);
      if (fs::exists(p)) init_masks.emplace(cls, read_mask(p));
    }
  } else {
    Script s = builtin_script(f.script);
    s.frames = given("--frames") ? f.frames : kBenchFrames;
    if (!given("--task")) c.task = s.task;
    SyntheticVideo v = generate(s, c.seed);
    frames = std::move(v.frames);
    classes = v.classes;
    for (std::size_t i = 0; i < classes.size(); ++i) init_masks.emplace(classes[i], v.masks[i][0]);
  }
  if (frames.size() < 2) throw DataError("bench needs at least two frames");

  std::vector<int> sizes = f.sizes;
  if (given("--batch-size")) sizes = {c.batch.batch_size};
  if (sizes.empty()) sizes = {5, 10, 15, 20, 25};

  const RuleSet rules = effective_rules(c);
  const auto enc = make_encoder(c);
  const InMemoryFrameSource source(frames);
  InitSetup init{frames.front(), init_masks, 1};

  Metrics metrics;
  bool all_met = true;
  std::vector<StageTiming> all;
  for (int bs : sizes) {
    if (bs <= 0) throw DataError("batch sizes must be positive");
    const BatchConfig cfg{bs, c.batch.source_rate};
    std::vector<Worker> workers = make_workers(init, classes, *enc, c);
    PipelineOptions po;
    po.parallel = !f.serial;
    po.start = init.start;
    po.scene = scene_options(rules);
    const RunResult r = run_pipeline(source, cfg, workers, *enc, rules, po);
    const DeadlineSummary d = check_deadlines(r.timings, cfg);
    metrics.timing.push_back({bs, cfg.deadline_ms(), d.mean_segmentation_ms,
                              d.mean_segmentation_sum_ms, d.mean_context_ms, d.mean_total_ms,
                              d.fraction_met});
    all_met = all_met && d.met == d.batches;
    std::cerr << "batch " << bs << ": " << d.batches << " windows, max " << d.max_total_ms
              << " ms, " << d.met << "/" << d.batches << " within " << cfg.deadline_ms()
              << " ms\n";
    all.insert(all.end(), r.timings.begin(), r.timings.end());
  }

  const Report r = emit_report(metrics);
  std::cout << r.text;
  if (!c.output.empty()) {
    std::ofstream out(c.output);
    if (!out) throw DataError("cannot write " + c.output);
    out << r.timing_csv;
  }
  if (f.strict && !all_met) {
    std::cerr << "deadline violated\n";
    return kDeadlineViolation;
  }
  return kOk;
}

int cmd_synth(const Flags& f, std::optional<double> rate, const Given& given) {
  if (f.out.empty()) throw DataError("synth needs --out");
  const auto names = builtin_script_names();
  Script s = std::find(names.begin(), names.end(), f.script) != names.end()
                 ? builtin_script(f.script)
                 : load_script(f.script);
  if (given("--frames")) {
    if (f.frames <= 0) throw DataError("--frames must be positive");
    s.frames = std::min(s.frames, f.frames);
  }
  const SceneGenerator gen(s, f.seed);
  write_corpus(gen, f.out, rate.value_or(3.0));
  std::cout << "wrote " << s.frames << " frames of '" << s.name << "' (seed " << f.seed
            << ") to " << f.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Surgical context from object masks", "surgctx"};
  app.require_subcommand(1);
  Flags f;

  auto* seg = app.add_subcommand("segment", "propagate first-frame masks through a trial");
  add_config_flags(seg, f);
  add_segmentation_flags(seg, f);
  seg->add_option("--input", f.input, "trial directory with frames/")->required();
  seg->add_option("--out", f.out, "output trial directory")->required();
  seg->add_option("--rate", f.rate, "source frame rate (Hz)");

  auto* ctx = app.add_subcommand("context", "masks to a context timeline CSV");
  add_config_flags(ctx, f);
  ctx->add_option("--input", f.input, "trial directory with masks/")->required();
  ctx->add_option("--out", f.out, "timeline CSV to write")->required();
  ctx->add_option("--rate", f.rate, "output rate in Hz (default: manifest context rate)");
  ctx->add_flag("--no-jaws", f.no_jaws, "ignore jaws.csv annotations");

  auto* ev = app.add_subcommand("eval", "compare predictions with ground truth");
  ev->add_option("--task", f.task, "task for bare CSV inputs");
  ev->add_option("--pred", f.pred, "trial directory or context CSV")->required();
  ev->add_option("--gt", f.gt, "trial directory or context CSV")->required();
  ev->add_option("--out", f.out, "directory for report.txt and CSVs");

  auto* bench = app.add_subcommand("bench", "time the pipeline over batch sizes");
  add_config_flags(bench, f);
  add_segmentation_flags(bench, f);
  bench->add_option("--input", f.input, "trial directory (default: synthetic video)");
  bench->add_option("--script", f.script, "builtin script for the synthetic video");
  bench->add_option("--frames", f.frames, "synthetic video length");
  bench->add_option("--sizes", f.sizes, "batch sizes")->delimiter(',');
  bench->add_option("--rate", f.rate, "source frame rate (Hz)");
  bench->add_option("--out", f.out, "timing CSV");
  bench->add_flag("--strict", f.strict, "exit 3 when any window misses its deadline");

  auto* synth = app.add_subcommand("synth", "render a synthetic trial");
  synth->add_option("--script", f.script, "builtin name or script JSON");
  synth->add_option("--seed", f.seed, "random seed");
  synth->add_option("--frames", f.frames, "truncate to this many frames");
  synth->add_option("--rate", f.rate, "context rate in Hz (default 3)");
  synth->add_option("--out", f.out, "trial directory")->required();

  try {
    std::vector<std::string> rest(args.rbegin(), args.rend());
    if (!rest.empty()) rest.pop_back();
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Given given{sub};
    const std::optional<double> rate =
        given("--rate") ? std::optional<double>(f.rate) : std::nullopt;
    if (sub == synth) return cmd_synth(f, rate, given);
    if (sub == ev) {
      RunConfig c;
      if (given("--task")) {
        auto t = parse_task(f.task);
        if (!t) throw DataError("unknown task '" + f.task + "'");
        c.task = *t;
      }
      c.output = f.out;
      return cmd_eval(f.pred, f.gt, c);
    }
    RunConfig c = bind_config(f, given);
    if (sub == ctx) return cmd_context(c, rate, !f.no_jaws);
    if (rate) c.batch.source_rate = *rate;
    if (!(c.batch.source_rate > 0.0)) throw DataError("rate must be positive");
    if (sub == seg) return cmd_segment(c, f.serial);
    return cmd_bench(c, f, given);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace surgctx::cli
