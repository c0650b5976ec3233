#include "bidplan/grad/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bidplan {

namespace {

constexpr const char* kMagic = "bidplan-checkpoint 1";

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw std::runtime_error("checkpoint " + path.string() + " line " + std::to_string(line) + ": " +
                           what);
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  checkpoint.params.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kMagic << '\n';
  for (const auto& [key, value] : checkpoint.meta) {
    if (key.empty() || key.find_first_of(" \n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint: invalid meta entry '" + key + "'");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const ParamSlice& s : checkpoint.params.layout()) {
    out << "group " << s.name << ' ' << s.offset << ' ' << s.size << '\n';
  }
  out << "values " << checkpoint.params.size() << '\n';
  for (double v : checkpoint.params.values) out << real_text(v) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kMagic) fail(path, line_no, "missing header");

  Checkpoint ck;
  std::size_t expected = 0;
  bool have_values = false;
  while (!have_values && std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (tag == "group") {
      std::string name;
      std::size_t offset = 0;
      std::size_t size = 0;
      if (!(fields >> name >> offset >> size)) fail(path, line_no, "malformed group line");
      if (ck.params.add(name, size) != offset) fail(path, line_no, "group offset mismatch");
    } else if (tag == "values") {
      if (!(fields >> expected)) fail(path, line_no, "malformed values line");
      have_values = true;
    } else {
      fail(path, line_no, "unexpected record '" + tag + "'");
    }
  }
  if (!have_values) fail(path, line_no, "missing values section");
  if (expected != ck.params.size()) fail(path, line_no, "value count does not match groups");
  for (std::size_t i = 0; i < expected; ++i) {
    ++line_no;
    if (!std::getline(in, line)) fail(path, line_no, "truncated values");
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0') fail(path, line_no, "malformed value");
    ck.params.values[i] = v;
  }
  return ck;
}

const std::string& meta_value(const Checkpoint& checkpoint, const std::string& key) {
  auto it = checkpoint.meta.find(key);
  if (it == checkpoint.meta.end()) {
    throw std::runtime_error("checkpoint is missing meta field '" + key + "'");
  }
  return it->second;
}

double meta_real(const Checkpoint& checkpoint, const std::string& key) {
  const std::string& text = meta_value(checkpoint, key);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw std::runtime_error("checkpoint meta '" + key + "' is not a number");
  }
  return v;
}

int meta_int(const Checkpoint& checkpoint, const std::string& key) {
  const std::string& text = meta_value(checkpoint, key);
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("checkpoint meta '" + key + "' is not an integer");
}

std::vector<int> meta_ints(const Checkpoint& checkpoint, const std::string& key) {
  const std::string& text = meta_value(checkpoint, key);
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw std::runtime_error("checkpoint meta '" + key + "' is not an integer list");
    }
  }
  return out;
}

std::string real_text(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string ints_text(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace bidplan
