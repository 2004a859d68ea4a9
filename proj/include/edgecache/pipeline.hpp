#pragma once

#include <string_view>
#include <vector>

#include "edgecache/features.hpp"
#include "edgecache/model.hpp"
#include "edgecache/neural.hpp"
#include "edgecache/solver.hpp"

namespace edgecache {

/// Row-major flows x edge_clouds probabilities.
struct Predictions {
  int flows = 0;
  int edge_clouds = 0;
  std::vector<double> probs;

  double at(int k, int e) const { return probs[static_cast<std::size_t>(k) * edge_clouds + e]; }
  /// Most probable EC of row k, ties to the lowest index.
  int argmax(int k) const;
};

/// o_ke = 1 where pred_ke >= delta.
PredictionMatrix threshold_filter(const Predictions& pred, double delta);

/// How O rows are formed for blocks after the first.
enum class OMode { threshold, argmax };

std::string_view to_string(OMode m);
OMode omode_from_string(std::string_view s);

struct InferOptions {
  double delta = 0.001;
  OMode o_mode = OMode::threshold;
};

struct BlockInference {
  Predictions predictions;
  PredictionMatrix o;
  std::vector<Commitment> commitments;
  /// Input image of every block, after the commitments of earlier blocks.
  std::vector<FeatureImage> block_images;
  int blocks = 0;
};

/// Runs the bank over consecutive blocks of bank-size flow rows. Each block's
/// flows are committed to their most probable EC (served from their most
/// probable AR) before the image is updated for the next block. The last
/// block is padded with zero rows. A flow whose O row comes out empty keeps
/// its argmax EC.
BlockInference infer_blocks(const CnnBank& bank, const Instance& inst, const PathTables& pt,
                            const InferOptions& opts = {});

struct PipelineOptions {
  InferOptions infer;
  SolveLimits limits;
  PenaltyConfig penalty;
  ModelOptions model;
  /// Seed the reduced solve with the committed placement.
  bool warm_start = true;
};

struct CnnSolveResult {
  EvaluatedSolution solution;
  PredictionMatrix o;
  int reduced_variables = 0;
  double predict_s = 0.0;
  double solve_s = 0.0;
  double total_s = 0.0;  // image encoding through evaluation
};

/// Predict, reduce the model with x_ke <= o_ke, solve and evaluate.
CnnSolveResult solve_with_cnn(const Instance& inst, const PathTables& pt, const CnnBank& bank,
                              const PipelineOptions& opts = {});

}  // namespace edgecache
