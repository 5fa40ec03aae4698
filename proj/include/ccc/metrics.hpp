#pragma once

// Task bookkeeping and the two stream metrics: Performance Mean and the
// node-level Forgetting Measure.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/matrix.hpp"

namespace ccc {

struct TaskRecord {
  std::size_t task_index = 0;
  std::set<NodeId> correct;  // C_i
  std::set<NodeId> wrong;    // E_i
  double accuracy = 0.0;     // |C| / (|C| + |E|)
};

/// Argmax prediction per evaluated node (ties to the lowest class index),
/// partitioned into correct and error sets.
inline TaskRecord evaluate_task(const Matrix& logits, const std::vector<int>& labels,
                                const std::vector<NodeId>& row_ids,
                                const std::set<NodeId>& eval_node_ids,
                                std::size_t task_index = 0) {
  if (logits.rows != labels.size() || logits.rows != row_ids.size())
    throw std::invalid_argument("evaluate_task: row alignment mismatch");
  if (eval_node_ids.empty()) throw ConfigError("evaluate_task: empty eval set");

  std::map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < row_ids.size(); ++i) pos[row_ids[i]] = i;

  TaskRecord rec;
  rec.task_index = task_index;
  for (NodeId id : eval_node_ids) {
    auto it = pos.find(id);
    if (it == pos.end())
      throw std::invalid_argument("evaluate_task: eval node " + std::to_string(id) +
                                  " not in logits");
    const std::size_t row = it->second;
    if (labels[row] < 0)
      throw std::invalid_argument("evaluate_task: unlabeled eval node " +
                                  std::to_string(id));
    std::size_t pred = 0;
    for (std::size_t j = 1; j < logits.cols; ++j)
      if (logits.at(row, j) > logits.at(row, pred)) pred = j;
    if (pred == static_cast<std::size_t>(labels[row]))
      rec.correct.insert(id);
    else
      rec.wrong.insert(id);
  }
  rec.accuracy = static_cast<double>(rec.correct.size()) /
                 static_cast<double>(eval_node_ids.size());
  return rec;
}

/// Arithmetic mean of per-task accuracies.
inline double performance_mean(const std::vector<TaskRecord>& records) {
  if (records.empty()) throw ConfigError("performance_mean: no task records");
  double sum = 0.0;
  for (const TaskRecord& r : records) sum += r.accuracy;
  return sum / static_cast<double>(records.size());
}

struct FmValue {
  double value = 0.0;
  bool degenerate = false;  // every previously-correct node was deleted
};

/// |C_i intersect E_{i+1}| / |C_i|, with nodes deleted between the tasks
/// excluded from both numerator and denominator. A node of C_i absent from
/// the next evaluation counts as deleted.
inline FmValue forgetting_measure(const TaskRecord& prev, const TaskRecord& next) {
  std::size_t surviving = 0;
  std::size_t forgotten = 0;
  for (NodeId id : prev.correct) {
    if (next.wrong.count(id)) {
      ++surviving;
      ++forgotten;
    } else if (next.correct.count(id)) {
      ++surviving;
    }
  }
  if (surviving == 0) return {0.0, true};
  return {static_cast<double>(forgotten) / static_cast<double>(surviving), false};
}

struct FmAggregate {
  std::vector<FmValue> pairwise;  // one per consecutive record pair
  double mean = 0.0;
};

/// Mean forgetting over consecutive task pairs.
inline FmAggregate aggregate_fm(const std::vector<TaskRecord>& records) {
  if (records.size() < 2)
    throw ConfigError("aggregate_fm: need at least 2 task records");
  FmAggregate agg;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    agg.pairwise.push_back(forgetting_measure(records[i], records[i + 1]));
    sum += agg.pairwise.back().value;
  }
  agg.mean = sum / static_cast<double>(agg.pairwise.size());
  return agg;
}

/// Stream-level report assembled from per-task records.
struct MetricsReport {
  std::vector<TaskRecord> per_task;
  std::vector<FmValue> pairwise_fm;
  double pm = 0.0;
  double fm_mean = 0.0;
  std::vector<std::string> flags;
};

inline MetricsReport build_metrics_report(const std::vector<TaskRecord>& records) {
  MetricsReport rep;
  rep.per_task = records;
  rep.pm = performance_mean(records);
  if (records.size() >= 2) {
    const FmAggregate agg = aggregate_fm(records);
    rep.pairwise_fm = agg.pairwise;
    rep.fm_mean = agg.mean;
    for (std::size_t i = 0; i < agg.pairwise.size(); ++i)
      if (agg.pairwise[i].degenerate)
        rep.flags.push_back("degenerate_fm:" + std::to_string(records[i].task_index) +
                            "->" + std::to_string(records[i + 1].task_index));
  } else {
    rep.flags.push_back("no_fm_pairs");
  }
  return rep;
}

}  // namespace ccc
