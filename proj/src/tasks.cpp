// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "saicl/error.hpp"
#include "saicl/rng.hpp"

namespace saicl {
namespace {

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > (std::size_t{1} << 40) / std::max<std::size_t>(base, 1)) return std::size_t{1} << 40;
    r *= base;
  }
  return r;
}

int wrap(int token, int lo, int hi) {
  const int range = hi - lo;
  return lo + (((token - lo) % range) + range) % range;
}

std::vector<int> copy_offsets(const TaskFamily& f) {
  std::vector<int> out = f.offsets;
  for (int o = 0; out.size() < f.arity; ++o)
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
  std::sort(out.begin(), out.end());
  return out;
}

Tokens random_input(Rng& rng, std::size_t n, int lo, int hi) {
  Tokens t(n);
  for (int& v : t) v = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
  return t;
}

Episode lookup_episode(const TaskFamily& f, std::size_t k, Rng& rng) {
  const int label_lo = f.token_lo;
  const int key_lo = f.token_lo + static_cast<int>(f.arity);
  std::vector<Tokens> options;
  for (std::size_t c = 0; c < f.arity; ++c) options.push_back({label_lo + static_cast<int>(c)});

  std::set<Tokens> seen;
  Episode e;
  while (e.demos.size() < k) {
    Tokens key = random_input(rng, f.input_length, key_lo, f.token_hi);
    if (!seen.insert(key).second) continue;
    const int label = label_lo + static_cast<int>(rng.below(f.arity));
    e.demos.push_back({std::move(key), {label}, "lookup", options});
  }
  if (k == 0) {
    // Nothing to look up: the answer is still drawn so the example is valid.
    e.test = {random_input(rng, f.input_length, key_lo, f.token_hi),
              {label_lo + static_cast<int>(rng.below(f.arity))}, "lookup", options};
  } else {
    const TaskExample& source = e.demos[rng.below(k)];
    e.test = {source.x, source.y, "lookup", options};
  }
  return e;
}

Episode classify_episode(const TaskFamily& f, std::size_t k, Rng& rng) {
  const int pool_lo = f.token_lo;
  const int feature_lo = f.token_lo + static_cast<int>(2 * f.arity);
  std::vector<int> pool(2 * f.arity);
  std::iota(pool.begin(), pool.end(), pool_lo);
  rng.shuffle(pool.begin(), pool.end());
  std::vector<Tokens> options;
  for (std::size_t c = 0; c < f.arity; ++c) options.push_back({pool[c]});

  std::vector<std::size_t> vote(static_cast<std::size_t>(f.token_hi - feature_lo));
  for (auto& v : vote) v = rng.below(f.arity);

  auto draw = [&] {
    Tokens x = random_input(rng, f.input_length, feature_lo, f.token_hi);
    std::vector<std::size_t> count(f.arity, 0);
    for (int t : x) ++count[vote[static_cast<std::size_t>(t - feature_lo)]];
    const auto cls = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    return TaskExample{std::move(x), options[cls], "classify", options};
  };
  Episode e;
  for (std::size_t i = 0; i < k; ++i) e.demos.push_back(draw());
  e.test = draw();
  return e;
}

Episode copy_episode(const TaskFamily& f, std::size_t k, Rng& rng) {
  const int offset = f.offsets[rng.below(f.offsets.size())];
  const std::vector<int> candidates = copy_offsets(f);
  auto draw = [&] {
    Tokens x = random_input(rng, f.input_length, f.token_lo, f.token_hi);
    auto shifted = [&](int o) {
      Tokens y = x;
      for (int& t : y) t = wrap(t + o, f.token_lo, f.token_hi);
      return y;
    };
    std::vector<Tokens> options;
    for (int o : candidates) options.push_back(shifted(o));
    return TaskExample{x, shifted(offset), "copy_offset", std::move(options)};
  };
  Episode e;
  for (std::size_t i = 0; i < k; ++i) e.demos.push_back(draw());
  e.test = draw();
  return e;
}

std::vector<int> int_array(const nlohmann::json& j, const char* field, std::size_t line) {
  if (!j.is_array()) throw FormatError("line " + std::to_string(line) + ": '" + field + "' must be an int array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer())
      throw FormatError("line " + std::to_string(line) + ": '" + field + "' must be an int array");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

void TaskExample::validate() const {
  if (x.empty() || y.empty()) throw Error("task example needs non-empty x and y");
  if (!options.empty() && std::find(options.begin(), options.end(), y) == options.end())
    throw Error("task example answer is not among its options");
}

std::string_view task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::lookup: return "lookup";
    case TaskKind::classify: return "classify";
    case TaskKind::copy_offset: return "copy_offset";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "lookup") return TaskKind::lookup;
  if (name == "classify") return TaskKind::classify;
  if (name == "copy_offset" || name == "copy") return TaskKind::copy_offset;
  throw Error("unknown task family '" + std::string(name) + "'");
}

TaskFamily TaskFamily::lookup(std::size_t vocab) {
  TaskFamily f;
  f.token_hi = static_cast<int>(vocab);
  return f;
}

TaskFamily TaskFamily::classify(std::size_t vocab) {
  TaskFamily f;
  f.kind = TaskKind::classify;
  f.token_hi = static_cast<int>(vocab);
  f.input_length = 3;
  return f;
}

TaskFamily TaskFamily::copy_offset(std::size_t vocab) {
  TaskFamily f;
  f.kind = TaskKind::copy_offset;
  f.token_hi = static_cast<int>(vocab);
  return f;
}

void TaskFamily::validate() const {
  if (token_lo < 0 || token_hi <= token_lo) throw Error("task family: empty token range");
  if (arity < 2) throw Error("task family: arity must be >= 2");
  if (input_length < 1) throw Error("task family: input_length must be >= 1");
  const auto range = static_cast<std::size_t>(token_hi - token_lo);
  switch (kind) {
    case TaskKind::lookup:
      if (range <= arity) throw Error("lookup family: no tokens left for keys");
      break;
    case TaskKind::classify:
      if (range <= 2 * arity) throw Error("classify family: no tokens left for features");
      break;
    case TaskKind::copy_offset:
      if (offsets.empty()) throw Error("copy family: offsets must be non-empty");
      if (offsets.size() > arity) throw Error("copy family: more offsets than options");
      break;
  }
}

std::size_t TaskFamily::max_demos() const {
  if (kind != TaskKind::lookup) return std::size_t{1} << 40;
  return ipow(static_cast<std::size_t>(token_hi - token_lo) - arity, input_length);
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + index + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Episode sample_episode(const TaskFamily& family, std::size_t k, std::uint64_t seed) {
  family.validate();
  if (k > family.max_demos())
    throw Error("task family cannot supply " + std::to_string(k) + " distinct demonstrations");
  Rng rng(seed);
  switch (family.kind) {
    case TaskKind::lookup: return lookup_episode(family, k, rng);
    case TaskKind::classify: return classify_episode(family, k, rng);
    case TaskKind::copy_offset: return copy_episode(family, k, rng);
  }
  throw Error("unreachable task kind");
}

void write_dataset(std::ostream& out, const std::vector<TaskExample>& examples) {
  for (const TaskExample& e : examples) {
    nlohmann::json j = {{"task", e.task}, {"input", e.x}, {"output", e.y}};
    if (!e.options.empty()) j["options"] = e.options;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("failed writing dataset");
}

void write_dataset(const std::string& path, const std::vector<TaskExample>& examples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset(out, examples);
}

std::vector<TaskExample> read_dataset(std::istream& in) {
  std::vector<TaskExample> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("line " + std::to_string(n) + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError("line " + std::to_string(n) + ": expected an object");
    for (const char* field : {"task", "input", "output"})
      if (!j.contains(field))
        throw FormatError("line " + std::to_string(n) + ": missing field '" + field + "'");
    TaskExample e;
    const auto& task = j["task"];
    if (task.is_string()) e.task = task.get<std::string>();
    else if (task.is_number_integer()) e.task = std::to_string(task.get<long long>());
    else throw FormatError("line " + std::to_string(n) + ": 'task' must be a string or integer");
    e.x = int_array(j["input"], "input", n);
    e.y = int_array(j["output"], "output", n);
    if (j.contains("options")) {
      if (!j["options"].is_array())
        throw FormatError("line " + std::to_string(n) + ": 'options' must be an array of int arrays");
      for (const auto& o : j["options"]) e.options.push_back(int_array(o, "options", n));
    }
    try {
      e.validate();
    } catch (const Error& err) {
      throw FormatError("line " + std::to_string(n) + ": " + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<TaskExample> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

}  // namespace saicl
