#include "a2v/checkpoint.h"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "a2v/error.h"

namespace a2v {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'A', '2', 'V', 'C', 'K', 'P', 'T', '1'};

void append_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t read_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string hex_u64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex_u64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : arrays) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  json header;
  header["format_version"] = checkpoint.format_version;
  header["step"] = checkpoint.step;
  json config = json::object();
  for (const auto& [k, v] : checkpoint.config) config[k] = v;
  header["config"] = config;
  json rng = json::array();
  for (uint64_t word : checkpoint.rng_state) rng.push_back(hex_u64(word));
  header["rng"] = rng;

  json arrays = json::array();
  uint64_t offset = 0;
  for (const auto& [name, tensor] : checkpoint.arrays) {
    json entry;
    entry["name"] = name;
    entry["dtype"] = "f64";
    entry["shape"] = tensor.shape;
    entry["offset"] = offset;
    arrays.push_back(entry);
    offset += static_cast<uint64_t>(tensor.numel()) * 8;
  }
  header["arrays"] = arrays;

  const std::string header_text = header.dump();
  std::string out;
  out.reserve(16 + header_text.size() + offset);
  out.append(kMagic, 8);
  append_u64(out, header_text.size());
  out += header_text;
  for (const auto& [name, tensor] : checkpoint.arrays) {
    const char* bytes = reinterpret_cast<const char*>(tensor.data());
    out.append(bytes, static_cast<size_t>(tensor.numel()) * 8);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError(path + ": not a checkpoint file");
  }
  const uint64_t header_len = read_u64(bytes.data() + 8);
  if (16 + header_len > bytes.size()) throw FormatError(path + ": truncated header");
  json header;
  try {
    header = json::parse(bytes.begin() + 16,
                         bytes.begin() + 16 + static_cast<int64_t>(header_len));
  } catch (const std::exception& e) {
    throw FormatError(path + ": bad header: " + e.what());
  }

  Checkpoint checkpoint;
  checkpoint.format_version = header.at("format_version").get<int>();
  if (checkpoint.format_version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " +
                      std::to_string(checkpoint.format_version));
  }
  checkpoint.step = header.at("step").get<int64_t>();
  for (const auto& [k, v] : header.at("config").items()) {
    checkpoint.config[k] = v.get<std::string>();
  }
  const auto& rng = header.at("rng");
  for (size_t i = 0; i < 4; ++i) {
    checkpoint.rng_state[i] = parse_hex_u64(rng.at(i).get<std::string>());
  }
  const size_t data_begin = 16 + header_len;
  for (const auto& entry : header.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    if (entry.at("dtype").get<std::string>() != "f64") {
      throw FormatError(path + ": unsupported dtype for " + name);
    }
    std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
    const uint64_t offset = entry.at("offset").get<uint64_t>();
    Tensor tensor(shape, 0.0);
    const size_t nbytes = static_cast<size_t>(tensor.numel()) * 8;
    if (data_begin + offset + nbytes > bytes.size()) {
      throw FormatError(path + ": truncated data for " + name);
    }
    std::memcpy(tensor.data(), bytes.data() + data_begin + offset, nbytes);
    checkpoint.arrays.emplace_back(name, std::move(tensor));
  }
  return checkpoint;
}

Checkpoint make_checkpoint(const ModelState& model, const AdamState& adam,
                           const Config& config, int64_t step, const Rng& rng) {
  Checkpoint checkpoint;
  checkpoint.step = step;
  checkpoint.config = config.entries();
  checkpoint.rng_state = rng.state();
  auto add_set = [&](const std::string& prefix, const ParamSet& set) {
    for (const auto& [name, var] : set.items) {
      checkpoint.arrays.emplace_back(prefix + name, var.value());
    }
  };
  add_set("frontend.", model.frontend);
  add_set("transformer.", model.transformer);
  add_set("decoder.", model.decoder);
  add_set("head.", model.head);
  for (size_t i = 0; i < model.teacher.size(); ++i) {
    checkpoint.arrays.emplace_back("teacher." + model.transformer.items[i].first,
                                   model.teacher[i]);
  }
  for (const auto& slot : adam.slots) {
    checkpoint.arrays.emplace_back("adam.m." + slot.name, slot.m);
    checkpoint.arrays.emplace_back("adam.v." + slot.name, slot.v);
  }
  Tensor t({1}, static_cast<double>(adam.t));
  checkpoint.arrays.emplace_back("adam.t", std::move(t));
  return checkpoint;
}

void restore_checkpoint(const Checkpoint& checkpoint, ModelState& model,
                        AdamState* adam, Rng* rng, bool strict) {
  auto restore_set = [&](const std::string& prefix, ParamSet& set,
                         bool required) {
    for (auto& [name, var] : set.items) {
      const Tensor* src = checkpoint.find(prefix + name);
      if (src == nullptr) {
        if (required) throw StateError("checkpoint missing array " + prefix + name);
        continue;
      }
      if (src->shape != var.value().shape) {
        throw StateError("checkpoint shape mismatch for " + prefix + name);
      }
      var.mutable_value() = *src;
    }
  };
  restore_set("frontend.", model.frontend, true);
  restore_set("transformer.", model.transformer, true);
  restore_set("decoder.", model.decoder, strict);
  restore_set("head.", model.head, strict);

  bool teacher_present = true;
  for (const auto& [name, var] : model.transformer.items) {
    if (checkpoint.find("teacher." + name) == nullptr) {
      teacher_present = false;
      break;
    }
  }
  if (teacher_present) {
    model.teacher.clear();
    for (const auto& [name, var] : model.transformer.items) {
      const Tensor* src = checkpoint.find("teacher." + name);
      if (src->shape != var.value().shape) {
        throw StateError("checkpoint shape mismatch for teacher." + name);
      }
      model.teacher.push_back(*src);
    }
  } else if (strict) {
    throw StateError("checkpoint missing teacher arrays");
  } else {
    model.reset_teacher();
  }

  if (adam != nullptr) {
    adam->slots.clear();
    adam->t = 0;
    const Tensor* t = checkpoint.find("adam.t");
    if (t != nullptr) {
      adam->t = static_cast<int64_t>(t->at(0));
      for (const auto& [name, tensor] : checkpoint.arrays) {
        if (name.rfind("adam.m.", 0) == 0) {
          AdamSlot slot;
          slot.name = name.substr(7);
          slot.m = tensor;
          const Tensor* v = checkpoint.find("adam.v." + slot.name);
          if (v == nullptr) throw StateError("checkpoint missing adam.v." + slot.name);
          slot.v = *v;
          adam->slots.push_back(std::move(slot));
        }
      }
    } else if (strict) {
      throw StateError("checkpoint missing optimizer state");
    }
  }
  if (rng != nullptr) rng->set_state(checkpoint.rng_state);
}

}  // namespace a2v
