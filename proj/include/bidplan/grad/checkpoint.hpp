#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bidplan/grad/param_vector.hpp"

namespace bidplan {

struct Checkpoint {
  ParamVector params;
  std::map<std::string, std::string> meta;  // architecture and provenance, no spaces in keys
};

// Line-oriented text: "meta <key> <value>", "group <name> <offset> <size>",
// "values <n>", then one value per line with 17 significant digits.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

const std::string& meta_value(const Checkpoint& checkpoint, const std::string& key);
double meta_real(const Checkpoint& checkpoint, const std::string& key);
int meta_int(const Checkpoint& checkpoint, const std::string& key);
std::vector<int> meta_ints(const Checkpoint& checkpoint, const std::string& key);

std::string real_text(double value);  // 17 significant digits
std::string ints_text(const std::vector<int>& values);  // comma separated

}  // namespace bidplan
