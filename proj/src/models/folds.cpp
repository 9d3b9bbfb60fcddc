#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/models.hpp"
#include "aif/rng.hpp"

namespace aif::models {

std::vector<FoldSplit> make_folds(std::span<const InstanceKey> keys, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("make_folds: k must be at least 2 (k = 1 leaves no training data)");
  std::map<int, std::vector<InstanceKey>> by_problem;
  for (const auto& key : keys) by_problem[key.problem_id].push_back(key);
  if (by_problem.empty()) throw ConfigError("make_folds: no keys");

  const std::size_t per_problem = by_problem.begin()->second.size();
  for (auto& [problem, list] : by_problem) {
    if (list.size() != per_problem) {
      throw ConfigError("make_folds: problem " + std::to_string(problem) + " has " +
                        std::to_string(list.size()) + " instances, expected " +
                        std::to_string(per_problem));
    }
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw ContractViolation("make_folds: duplicate instance key");
    }
  }
  const auto uk = static_cast<std::size_t>(k);
  if (per_problem % uk != 0) {
    throw ConfigError("make_folds: " + std::to_string(per_problem) +
                      " instances per problem not divisible by k = " + std::to_string(k));
  }
  const std::size_t slots = per_problem / uk;

  std::vector<FoldSplit> folds(uk);
  for (std::size_t f = 0; f < uk; ++f) folds[f].fold_id = static_cast<int>(f + 1);
  for (auto& [problem, list] : by_problem) {
    Rng rng(derive_seed(derive_seed(seed, "folds"), static_cast<std::uint64_t>(problem)));
    rng.shuffle(std::span<InstanceKey>(list));
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
      folds[pos / slots].test_keys.push_back(list[pos]);
    }
  }
  for (auto& fold : folds) {
    std::sort(fold.test_keys.begin(), fold.test_keys.end());
    const std::set<InstanceKey> test(fold.test_keys.begin(), fold.test_keys.end());
    for (const auto& [problem, list] : by_problem) {
      for (const auto& key : list) {
        if (!test.contains(key)) fold.train_keys.push_back(key);
      }
    }
    std::sort(fold.train_keys.begin(), fold.train_keys.end());
  }
  return folds;
}

void write_folds_csv(std::ostream& out, std::span<const FoldSplit> folds) {
  csv::Writer w(out);
  w.row("fold_id", "problem_id", "instance_id", "dimension");
  for (const auto& fold : folds) {
    for (const auto& key : fold.test_keys) {
      w.row(fold.fold_id, key.problem_id, key.instance_id, key.dimension);
    }
  }
}

std::vector<FoldSplit> read_folds_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto cf = t.column("fold_id");
  const auto cp = t.column("problem_id");
  const auto ci = t.column("instance_id");
  const auto cd = t.column("dimension");
  std::map<int, std::vector<InstanceKey>> tests;
  std::vector<InstanceKey> all;
  for (const auto& row : t.rows) {
    const InstanceKey key{static_cast<int>(csv::parse_int(row[cp])),
                          static_cast<int>(csv::parse_int(row[ci])),
                          static_cast<int>(csv::parse_int(row[cd]))};
    tests[static_cast<int>(csv::parse_int(row[cf]))].push_back(key);
    all.push_back(key);
  }
  std::sort(all.begin(), all.end());
  std::vector<FoldSplit> folds;
  for (auto& [id, test] : tests) {
    FoldSplit fold;
    fold.fold_id = id;
    std::sort(test.begin(), test.end());
    fold.test_keys = test;
    std::set_difference(all.begin(), all.end(), test.begin(), test.end(),
                        std::back_inserter(fold.train_keys));
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace aif::models
