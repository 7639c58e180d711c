#include "surgctx/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <regex>

#include "surgctx/error.hpp"
#include "surgctx/image_io.hpp"

namespace surgctx {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

DirectoryFrameSource::DirectoryFrameSource(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("frame directory " + dir.string() + " does not exist");
  static const std::regex kName(R"((\d+)\.(png|pgm))");
  std::vector<std::pair<int, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, kName)) {
      found.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  if (found.empty()) throw DataError("no frames (NNNNN.png) in " + dir.string());
  std::sort(found.begin(), found.end());
  for (auto& [index, path] : found) {
    if (!indices_.empty() && index == indices_.back()) {
      throw DataError("duplicate frame index " + std::to_string(index) + " in " + dir.string());
    }
    indices_.push_back(index);
    files_.push_back(std::move(path));
  }
}

Frame DirectoryFrameSource::frame(std::size_t i) const {
  return {indices_.at(i), read_image(files_.at(i))};
}

RunResult run_pipeline(const FrameSource& source, const BatchConfig& cfg,
                       std::vector<Worker>& workers, const Encoder& encoder,
                       const RuleSet& rules, const PipelineOptions& options) {
  if (cfg.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (!(cfg.source_rate > 0.0)) throw std::invalid_argument("source rate must be positive");
  for (const Worker& w : workers) {
    if (!w.bank.initialized()) {
      throw UninitializedBankError(std::string(directory_name(w.cls)) + " worker has no initial pair");
    }
  }

  RunResult result{Timeline(cfg.batch_size, cfg.source_rate), {}};
  std::optional<ContextState> last_state;
  const int n_workers = static_cast<int>(workers.size());

  for (std::size_t begin = options.start; begin < source.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(source.size(), begin + cfg.batch_size);
    std::vector<Frame> frames;
    frames.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) frames.push_back(source.frame(i));
    for (std::size_t k = 1; k < frames.size(); ++k) {
      if (frames[k].index != frames[k - 1].index + 1) {
        throw FrameOrderError("frame " + std::to_string(frames[k].index) + " does not follow " +
                              std::to_string(frames[k - 1].index));
      }
    }

    StageTiming timing;
    timing.first_frame = frames.front().index;
    timing.last_frame = frames.back().index;

    std::vector<std::vector<BinaryMask>> masks(workers.size());
    std::vector<double> worker_ms(workers.size(), 0.0);
    std::vector<std::string> errors(workers.size());

    const auto seg_start = Clock::now();
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (int w = 0; w < n_workers; ++w) {
      const auto t0 = Clock::now();
      try {
        masks[w] = segment_batch(workers[w].bank, frames, frames.front().index, encoder);
      } catch (const std::exception& e) {
        errors[w] = std::string(directory_name(workers[w].cls)) + ": " + e.what();
      }
      worker_ms[w] = ms_since(t0);
    }
    timing.segmentation_ms = ms_since(seg_start);
    for (double ms : worker_ms) timing.segmentation_sum_ms += ms;

    for (const std::string& e : errors) {
      if (e.empty()) continue;
      timing.failed = true;
      timing.error += (timing.error.empty() ? "" : "; ") + e;
    }

    // Context for the window's last frame only.
    ContextState state;
    state.task = rules.task();
    const auto ctx_start = Clock::now();
    if (!timing.failed) {
      std::vector<ClassMask> last;
      last.reserve(workers.size());
      for (int w = 0; w < n_workers; ++w) last.push_back({workers[w].cls, masks[w].back()});
      state = infer_context(build_scene(timing.last_frame, last, options.scene), rules);
    } else if (last_state) {
      state = *last_state;
    }
    timing.context_ms = ms_since(ctx_start);
    timing.total_ms = timing.segmentation_ms + timing.context_ms;
    timing.deadline_met = timing.total_ms <= cfg.deadline_ms();
    last_state = state;

    if (frames.size() == static_cast<std::size_t>(cfg.batch_size)) {
      result.timeline.append(timing.last_frame, state);
    }
    if (options.on_mask) {
      for (int w = 0; w < n_workers; ++w) {
        for (std::size_t k = 0; k < frames.size(); ++k) {
          if (k < masks[w].size()) {
            options.on_mask(workers[w], frames[k], masks[w][k]);
          } else {
            options.on_mask(workers[w], frames[k],
                            BinaryMask(frames[k].image.width(), frames[k].image.height()));
          }
        }
      }
    }
    result.timings.push_back(std::move(timing));
  }
  return result;
}

DeadlineSummary check_deadlines(std::span<const StageTiming> timings, const BatchConfig& cfg) {
  DeadlineSummary s;
  s.batches = timings.size();
  if (timings.empty()) return s;
  for (const StageTiming& t : timings) {
    if (t.total_ms <= cfg.deadline_ms()) ++s.met;
    if (t.failed) ++s.failed;
    s.max_total_ms = std::max(s.max_total_ms, t.total_ms);
    s.max_segmentation_ms = std::max(s.max_segmentation_ms, t.segmentation_ms);
    s.max_context_ms = std::max(s.max_context_ms, t.context_ms);
    s.mean_total_ms += t.total_ms;
    s.mean_segmentation_ms += t.segmentation_ms;
    s.mean_segmentation_sum_ms += t.segmentation_sum_ms;
    s.mean_context_ms += t.context_ms;
  }
  const double n = static_cast<double>(timings.size());
  s.fraction_met = static_cast<double>(s.met) / n;
  s.mean_total_ms /= n;
  s.mean_segmentation_ms /= n;
  s.mean_segmentation_sum_ms /= n;
  s.mean_context_ms /= n;
  return s;
}

}  // namespace surgctx
