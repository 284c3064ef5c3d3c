#include "a2v/labels.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "a2v/error.h"

namespace a2v {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_seconds(const std::string& s, int row, const char* what) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw LabelError("row " + std::to_string(row) + ": bad " + what + " '" +
                     s + "'");
  }
}

}  // namespace

int ClassTable::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

ClassTable ClassTable::parse(const std::string& text,
                             const std::string& origin) {
  ClassTable table;
  std::string focal_name;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("#focal=", 0) == 0) {
      focal_name = trim(line.substr(7));
      continue;
    }
    if (line[0] == '#') continue;
    table.names.push_back(line);
  }
  if (table.names.empty()) throw FormatError(origin + ": empty class table");
  std::set<std::string> seen(table.names.begin(), table.names.end());
  if (seen.size() != table.names.size()) {
    throw FormatError(origin + ": duplicate class names");
  }
  if (!focal_name.empty()) {
    int idx = table.index_of(focal_name);
    if (idx < 0) {
      throw FormatError(origin + ": focal class '" + focal_name +
                        "' not in table");
    }
    table.focal_index = idx;
  }
  return table;
}

ClassTable ClassTable::load(const std::string& path) {
  return parse(read_file(path), path);
}

void ClassTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  if (focal_index) out << "#focal=" << names[static_cast<size_t>(*focal_index)] << "\n";
  for (const auto& n : names) out << n << "\n";
}

LabelManifest parse_label_manifest(const std::string& text,
                                   const ClassTable& table,
                                   const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(origin + ": empty manifest");
  if (trim(line) != "clip_id,class,onset_s,offset_s,focal") {
    throw FormatError(origin + ": bad manifest header '" + trim(line) + "'");
  }
  LabelManifest manifest;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cols = split_csv_row(line);
    if (cols.size() != 5) {
      throw LabelError("row " + std::to_string(row) + ": expected 5 columns, got " +
                       std::to_string(cols.size()));
    }
    const std::string clip_id = trim(cols[0]);
    const std::string class_name = trim(cols[1]);
    const int class_id = table.index_of(class_name);
    if (class_id < 0) {
      throw LabelError("row " + std::to_string(row) + ": unknown class '" +
                       class_name + "'");
    }
    LabelEvent ev;
    ev.class_id = class_id;
    ev.onset_s = parse_seconds(trim(cols[2]), row, "onset");
    ev.offset_s = parse_seconds(trim(cols[3]), row, "offset");
    const std::string focal = trim(cols[4]);
    if (focal != "0" && focal != "1") {
      throw LabelError("row " + std::to_string(row) + ": focal must be 0 or 1");
    }
    ev.focal = focal == "1";
    if (ev.onset_s < 0.0) {
      throw LabelError("row " + std::to_string(row) + ": negative onset");
    }
    if (ev.offset_s <= ev.onset_s) {
      throw LabelError("row " + std::to_string(row) + ": offset <= onset");
    }
    manifest[clip_id].push_back(ev);
  }
  for (auto& [id, events] : manifest) {
    std::stable_sort(events.begin(), events.end(),
                     [](const LabelEvent& a, const LabelEvent& b) {
                       return a.onset_s < b.onset_s;
                     });
  }
  return manifest;
}

LabelManifest load_label_manifest(const std::string& path,
                                  const ClassTable& table) {
  return parse_label_manifest(read_file(path), table, path);
}

std::vector<LabelEvent> load_labels(const std::string& path,
                                    const ClassTable& table) {
  auto manifest = load_label_manifest(path, table);
  std::vector<LabelEvent> events;
  for (auto& [id, evs] : manifest) {
    events.insert(events.end(), evs.begin(), evs.end());
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const LabelEvent& a, const LabelEvent& b) {
                     return a.onset_s < b.onset_s;
                   });
  return events;
}

std::string format_seconds(double s) {
  char buf[64];
  for (int precision = 3; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*f", precision, s);
    if (std::stod(buf) == s) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", s);
  return buf;
}

std::string serialize_label_manifest(const LabelManifest& manifest,
                                     const ClassTable& table) {
  std::string out = "clip_id,class,onset_s,offset_s,focal\n";
  for (const auto& [id, events] : manifest) {
    for (const auto& ev : events) {
      out += id;
      out += ',';
      out += table.names[static_cast<size_t>(ev.class_id)];
      out += ',';
      out += format_seconds(ev.onset_s);
      out += ',';
      out += format_seconds(ev.offset_s);
      out += ',';
      out += ev.focal ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

void save_label_manifest(const std::string& path, const LabelManifest& manifest,
                         const ClassTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << serialize_label_manifest(manifest, table);
}

FrameTargets frame_targets(const std::vector<LabelEvent>& events,
                           double duration_s, double frame_rate,
                           const ClassTable& table) {
  if (frame_rate <= 0.0) throw ArgumentError("frame_targets: frame_rate <= 0");
  const int64_t n_frames =
      static_cast<int64_t>(std::llround(duration_s * frame_rate));
  FrameTargets out;
  out.frame_rate = frame_rate;
  out.frames = Tensor({n_frames, static_cast<int64_t>(table.size())}, 0.0);
  for (const auto& ev : events) {
    if (ev.onset_s < 0.0 || ev.offset_s > duration_s + 1e-9) {
      throw LabelError("event [" + format_seconds(ev.onset_s) + ", " +
                       format_seconds(ev.offset_s) + "] outside clip of " +
                       format_seconds(duration_s) + " s");
    }
    // First and last frame whose center (t + 0.5) / rate can fall inside.
    int64_t first = static_cast<int64_t>(
        std::floor(ev.onset_s * frame_rate - 0.5));
    int64_t last = static_cast<int64_t>(
        std::ceil(ev.offset_s * frame_rate - 0.5));
    first = std::max<int64_t>(first, 0);
    last = std::min<int64_t>(last, n_frames - 1);
    for (int64_t t = first; t <= last; ++t) {
      const double center = (static_cast<double>(t) + 0.5) / frame_rate;
      if (center >= ev.onset_s && center < ev.offset_s) {
        out.frames.at(t, ev.class_id) = 1.0;
        if (ev.focal && table.focal_index) {
          out.frames.at(t, *table.focal_index) = 1.0;
        }
      }
    }
  }
  return out;
}

}  // namespace a2v
