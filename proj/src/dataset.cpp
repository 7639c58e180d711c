#include "surgctx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "surgctx/error.hpp"
#include "surgctx/image_io.hpp"

namespace fs = std::filesystem;

namespace surgctx {

int Manifest::context_step() const {
  const double step = video_rate / context_rate;
  if (!(context_rate > 0.0) || std::abs(step - std::round(step)) > 1e-9 || std::round(step) < 1.0) {
    throw DataError("manifest: context rate must divide the video rate");
  }
  return static_cast<int>(std::round(step));
}

Manifest read_manifest(const fs::path& trial) {
  Manifest m;
  std::ifstream in(trial / "manifest.txt");
  if (!in) return m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "task") {
        auto t = parse_task(value);
        if (!t) throw DataError("manifest: unknown task '" + value + "'");
        m.task = *t;
      } else if (key == "video_rate") {
        m.video_rate = std::stod(value);
      } else if (key == "context_rate") {
        m.context_rate = std::stod(value);
      } else if (key == "width") {
        m.width = std::stoi(value);
      } else if (key == "height") {
        m.height = std::stoi(value);
      } else if (key == "frames") {
        m.frames = std::stoi(value);
      } else {
        m.extra[key] = value;
      }
    } catch (const std::logic_error&) {
      throw DataError("manifest: bad value for " + key + ": '" + value + "'");
    }
  }
  return m;
}

void write_manifest(const fs::path& trial, const Manifest& m) {
  fs::create_directories(trial);
  std::ofstream out(trial / "manifest.txt");
  out << "task=" << task_name(m.task) << '\n'
      << "video_rate=" << m.video_rate << '\n'
      << "context_rate=" << m.context_rate << '\n'
      << "width=" << m.width << '\n'
      << "height=" << m.height << '\n'
      << "frames=" << m.frames << '\n';
  for (const auto& [k, v] : m.extra) out << k << '=' << v << '\n';
  if (!out) throw DataError("cannot write " + (trial / "manifest.txt").string());
}

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

fs::path frame_path(const fs::path& trial, int index) { return trial / "frames" / frame_file_name(index); }

fs::path mask_dir(const fs::path& trial, ObjectClass cls) {
  return trial / "masks" / std::string(directory_name(cls));
}

fs::path mask_path(const fs::path& trial, ObjectClass cls, int index) {
  return mask_dir(trial, cls) / frame_file_name(index);
}

namespace {

std::vector<int> numbered_images(const fs::path& dir) {
  std::vector<int> out;
  if (!fs::is_directory(dir)) return out;
  static const std::regex kName(R"((\d+)\.(png|pgm))");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, kName)) out.push_back(std::stoi(m[1].str()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> list_frames(const fs::path& trial) { return numbered_images(trial / "frames"); }

std::vector<int> list_masks(const fs::path& trial, ObjectClass cls) {
  return numbered_images(mask_dir(trial, cls));
}

void write_jaws_csv(const fs::path& path, const JawTable& jaws) {
  std::ofstream out(path);
  out << "frame,lg_ax,lg_ay,lg_bx,lg_by,rg_ax,rg_ay,rg_bx,rg_by\n";
  char buf[64];
  for (const auto& [frame, pair] : jaws) {
    out << frame;
    for (const auto& j : pair) {
      if (j) {
        for (double v : {j->a.x, j->a.y, j->b.x, j->b.y}) {
          std::snprintf(buf, sizeof(buf), ",%.4f", v);
          out << buf;
        }
      } else {
        out << ",,,,";
      }
    }
    out << '\n';
  }
  if (!out) throw DataError("cannot write " + path.string());
}

JawTable read_jaws_csv(const fs::path& path) {
  JawTable table;
  std::ifstream in(path);
  if (!in) return table;
  std::string line;
  std::getline(in, line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(9);
    try {
      const int frame = std::stoi(cells[0]);
      auto& pair = table[frame];
      for (int g = 0; g < 2; ++g) {
        const int o = 1 + 4 * g;
        if (cells[o].empty()) continue;
        pair[g] = JawAnnotation{{std::stod(cells[o]), std::stod(cells[o + 1])},
                                {std::stod(cells[o + 2]), std::stod(cells[o + 3])}};
      }
    } catch (const std::logic_error&) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": malformed row");
    }
  }
  return table;
}

void write_timeline(const fs::path& path, const Timeline& t) {
  std::ofstream out(path);
  write_timeline_csv(out, t);
  if (!out) throw DataError("cannot write " + path.string());
}

Timeline read_timeline(const fs::path& path, Task task, int default_step, double video_rate) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_timeline_csv(in, task, default_step, video_rate);
}

void write_corpus(const SceneGenerator& gen, const fs::path& trial, double context_rate) {
  const Script& s = gen.script();
  fs::create_directories(trial / "frames");
  const std::vector<ObjectClass> classes = gen.classes();
  for (ObjectClass c : classes) fs::create_directories(mask_dir(trial, c));

  JawTable jaws;
  for (int f = 0; f < gen.frame_count(); ++f) {
    const SynthFrame sf = gen.render(f);
    write_image(frame_path(trial, f), sf.frame.image);
    for (const ClassMask& cm : sf.masks) write_mask(mask_path(trial, cm.cls, f), cm.mask);
    if (sf.jaws[0] || sf.jaws[1]) jaws[f] = sf.jaws;
  }
  write_jaws_csv(trial / "jaws.csv", jaws);

  Manifest m;
  m.task = s.task;
  m.video_rate = 30.0;
  m.context_rate = context_rate;
  m.width = s.width;
  m.height = s.height;
  m.frames = s.frames;
  m.extra["script"] = s.name;
  write_manifest(trial, m);
  write_timeline(trial / "context.csv", resample(gen.context(), context_rate));
}

}  // namespace surgctx
