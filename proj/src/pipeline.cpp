#include "edgecache/pipeline.hpp"

#include <chrono>
#include <string>

#include "edgecache/error.hpp"
#include "edgecache/greedy.hpp"

namespace edgecache {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int argmax_router(const Instance& inst, int k) {
  const auto& p = inst.flows[k].mobility;
  int best = 0;
  for (int a = 1; a < static_cast<int>(p.size()); ++a)
    if (p[a] > p[best]) best = a;
  return best;
}

}  // namespace

int Predictions::argmax(int k) const {
  int best = 0;
  for (int e = 1; e < edge_clouds; ++e)
    if (at(k, e) > at(k, best)) best = e;
  return best;
}

PredictionMatrix threshold_filter(const Predictions& pred, double delta) {
  if (pred.probs.size() != static_cast<std::size_t>(pred.flows) * pred.edge_clouds)
    throw Error(ErrorCode::dimension_mismatch, "prediction matrix has the wrong size");
  auto o = PredictionMatrix::zeros(pred.flows, pred.edge_clouds);
  for (std::size_t i = 0; i < pred.probs.size(); ++i) o.allowed[i] = pred.probs[i] >= delta ? 1 : 0;
  return o;
}

std::string_view to_string(OMode m) { return m == OMode::threshold ? "threshold" : "argmax"; }

OMode omode_from_string(std::string_view s) {
  if (s == "threshold") return OMode::threshold;
  if (s == "argmax") return OMode::argmax;
  throw Error(ErrorCode::invalid_argument, "unknown o_mode " + std::string(s));
}

BlockInference infer_blocks(const CnnBank& bank, const Instance& inst, const PathTables& pt,
                            const InferOptions& opts) {
  if (bank.models.empty()) throw Error(ErrorCode::missing_bank, "bank has no models");
  const int size = bank.size(), K = inst.num_flows(), E = inst.num_edge_clouds;
  const auto& arch = bank.arch;
  const int width = inst.num_access_routers + E + inst.num_links;
  if (arch.input_rows != size || arch.input_cols != width || arch.outputs != E)
    throw Error(ErrorCode::shape_mismatch, "bank expects " + std::to_string(arch.input_rows) + "x" +
                                               std::to_string(arch.input_cols) + " images with " +
                                               std::to_string(arch.outputs) + " outputs");
  if (!(opts.delta > 0.0 && opts.delta < 1.0)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0,1)");

  BlockInference out;
  out.predictions = {K, E, std::vector<double>(static_cast<std::size_t>(K) * E, 0.0)};
  out.o = PredictionMatrix::zeros(K, E);
  auto image = encode_image(inst);
  for (int first = 0; first < K; first += size) {
    const int block = out.blocks++;
    out.block_images.push_back(image);
    const auto pixels = image.block(first, size);
    std::vector<Commitment> commits;
    for (int i = 0; i < size && first + i < K; ++i) {
      const int k = first + i;
      const auto p = forward(bank.models[i], pixels);
      std::copy(p.begin(), p.end(), out.predictions.probs.begin() + static_cast<std::ptrdiff_t>(k) * E);
      const int best = out.predictions.argmax(k);
      bool any = false;
      for (int e = 0; e < E; ++e) {
        const bool keep = block > 0 && opts.o_mode == OMode::argmax ? e == best : p[e] >= opts.delta;
        out.o.allowed[static_cast<std::size_t>(k) * E + e] = keep ? 1 : 0;
        any = any || keep;
      }
      if (!any) out.o.allowed[static_cast<std::size_t>(k) * E + best] = 1;
      commits.push_back({k, best, argmax_router(inst, k)});
    }
    out.commitments.insert(out.commitments.end(), commits.begin(), commits.end());
    if (first + size < K) image = update_image(image, pt, commits);
  }
  return out;
}

CnnSolveResult solve_with_cnn(const Instance& inst, const PathTables& pt, const CnnBank& bank,
                              const PipelineOptions& opts) {
  CnnSolveResult r;
  const auto start = Clock::now();
  const auto inference = infer_blocks(bank, inst, pt, opts.infer);
  const auto predicted = Clock::now();
  r.o = inference.o;
  const auto model = apply_reduction(build_milp(inst, pt, opts.model), r.o);
  r.reduced_variables = count_variables(model).total;

  BnbOptions bnb;
  bnb.limits = opts.limits;
  if (opts.warm_start) {
    std::vector<int> placement(inst.num_flows(), -1);
    for (const auto& c : inference.commitments) placement[c.flow] = c.cloud;
    bnb.warm_start = placement_warm_start(model, inst, pt, placement);
  }
  const auto sol = solve_bnb(model, bnb);
  const auto solved = Clock::now();
  r.solution = evaluate_solution(inst, pt, sol, opts.penalty, opts.model.epsilon_cap);
  const auto done = Clock::now();
  r.predict_s = seconds_between(start, predicted);
  r.solve_s = seconds_between(predicted, solved);
  r.total_s = seconds_between(start, done);
  return r;
}

}  // namespace edgecache
