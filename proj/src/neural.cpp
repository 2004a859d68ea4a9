#include "edgecache/neural.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "edgecache/error.hpp"
#include "edgecache/parallel.hpp"

namespace edgecache {

namespace {

using Mat = Eigen::MatrixXd;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

constexpr char kMagic[8] = {'E', 'D', 'G', 'E', 'C', 'N', 'N', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kProbFloor = 1e-12;

struct Shape {
  int rows = 0;
  int cols = 0;
};

// (rows, cols) of every layer's weight matrix, conv layers first.
std::vector<Shape> layer_shapes(const Architecture& a) {
  std::vector<Shape> out;
  int maps = 1;
  const int kk = a.kernel * a.kernel;
  for (int m : a.conv_maps) {
    out.push_back({m, maps * kk});
    maps = m;
  }
  int width = maps * a.input_size();
  for (int h : a.hidden) {
    out.push_back({h, width});
    width = h;
  }
  out.push_back({a.outputs, width});
  return out;
}

void validate(const Architecture& a) {
  if (a.input_rows <= 0 || a.input_cols <= 0 || a.outputs <= 0 || a.kernel <= 0 || a.kernel % 2 == 0)
    throw Error(ErrorCode::shape_mismatch, "invalid architecture");
  for (int m : a.conv_maps)
    if (m <= 0) throw Error(ErrorCode::shape_mismatch, "conv layer without maps");
  for (int h : a.hidden)
    if (h <= 0) throw Error(ErrorCode::shape_mismatch, "empty dense layer");
}

// Same-padding patches: row (map, kr, kc), column r * cols + c.
Mat im2col(const Mat& in, int rows, int cols, int k) {
  const int pad = k / 2;
  Mat out = Mat::Zero(in.rows() * k * k, rows * cols);
  for (int m = 0; m < in.rows(); ++m)
    for (int kr = 0; kr < k; ++kr)
      for (int kc = 0; kc < k; ++kc) {
        const int row = (m * k + kr) * k + kc;
        for (int r = 0; r < rows; ++r) {
          const int rr = r + kr - pad;
          if (rr < 0 || rr >= rows) continue;
          for (int c = 0; c < cols; ++c) {
            const int cc = c + kc - pad;
            if (cc >= 0 && cc < cols) out(row, r * cols + c) = in(m, rr * cols + cc);
          }
        }
      }
  return out;
}

Mat col2im(const Mat& col, int maps, int rows, int cols, int k) {
  const int pad = k / 2;
  Mat out = Mat::Zero(maps, rows * cols);
  for (int m = 0; m < maps; ++m)
    for (int kr = 0; kr < k; ++kr)
      for (int kc = 0; kc < k; ++kc) {
        const int row = (m * k + kr) * k + kc;
        for (int r = 0; r < rows; ++r) {
          const int rr = r + kr - pad;
          if (rr < 0 || rr >= rows) continue;
          for (int c = 0; c < cols; ++c) {
            const int cc = c + kc - pad;
            if (cc >= 0 && cc < cols) out(m, rr * cols + cc) += col(row, r * cols + c);
          }
        }
      }
  return out;
}

void relu(Mat& m) { m = m.cwiseMax(0.0); }

void softmax_columns(Mat& z) {
  for (int j = 0; j < z.cols(); ++j) {
    auto c = z.col(j);
    c.array() -= c.maxCoeff();
    c = c.array().exp().matrix();
    c /= c.sum();
  }
}

struct BatchCache {
  std::vector<std::vector<Mat>> patches;  // [sample][conv layer]
  std::vector<std::vector<Mat>> maps;     // [sample][conv layer], post-ReLU
  std::vector<Mat> dense_in;              // [dense layer] input, width x batch
  Mat probs;
};

ConstMatMap weights_of(const CnnModel& m, int layer, const Shape& s) {
  return ConstMatMap(m.layers[layer].weights.data(), s.rows, s.cols);
}

void check_input(const Architecture& a, std::span<const double> pixels) {
  if (static_cast<int>(pixels.size()) != a.input_size())
    throw Error(ErrorCode::shape_mismatch, "image has " + std::to_string(pixels.size()) + " pixels, model expects " +
                                               std::to_string(a.input_size()));
}

BatchCache forward_batch(const CnnModel& m, const std::vector<std::span<const double>>& images) {
  const auto& a = m.arch;
  const auto shapes = layer_shapes(a);
  const int convs = m.conv_layers();
  const int batch = static_cast<int>(images.size());
  const int hw = a.input_size();
  BatchCache cache;
  cache.patches.resize(batch);
  cache.maps.resize(batch);
  Mat flat(shapes[convs].cols, batch);
  for (int b = 0; b < batch; ++b) {
    check_input(a, images[b]);
    Mat in = ConstMatMap(images[b].data(), 1, hw);
    for (int c = 0; c < convs; ++c) {
      Mat patches = im2col(in, a.input_rows, a.input_cols, a.kernel);
      Mat out = weights_of(m, c, shapes[c]) * patches;
      out.colwise() += ConstVecMap(m.layers[c].bias.data(), shapes[c].rows);
      relu(out);
      cache.patches[b].push_back(std::move(patches));
      cache.maps[b].push_back(out);
      in = std::move(out);
    }
    flat.col(b) = Eigen::Map<const Eigen::VectorXd>(in.data(), in.size());
  }
  Mat act = std::move(flat);
  const int dense = static_cast<int>(shapes.size()) - convs;
  for (int d = 0; d < dense; ++d) {
    const int layer = convs + d;
    Mat z = weights_of(m, layer, shapes[layer]) * act;
    z.colwise() += ConstVecMap(m.layers[layer].bias.data(), shapes[layer].rows);
    if (d + 1 < dense) relu(z);
    cache.dense_in.push_back(std::move(act));
    act = std::move(z);
  }
  softmax_columns(act);
  cache.probs = std::move(act);
  return cache;
}

// g.weights += d * in^T, g.bias += row sums of d.
void add_outer(Layer& g, const Mat& d, const Mat& in) {
  MatMap(g.weights.data(), d.rows(), in.rows()).noalias() += d * in.transpose();
  Eigen::Map<Eigen::VectorXd>(g.bias.data(), d.rows()) += d.rowwise().sum();
}

double mean_loss(const CnnModel& m, const std::vector<std::span<const double>>& images,
                 const std::vector<int>& labels, double* accuracy) {
  if (images.empty()) {
    if (accuracy) *accuracy = 0.0;
    return 0.0;
  }
  double total = 0.0;
  int hits = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t first = 0; first < images.size(); first += kChunk) {
    const std::size_t last = std::min(images.size(), first + kChunk);
    const std::vector<std::span<const double>> chunk(images.begin() + first, images.begin() + last);
    const auto cache = forward_batch(m, chunk);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const int label = labels[first + b];
      total -= std::log(std::max(cache.probs(label, b), kProbFloor));
      Eigen::Index best;
      cache.probs.col(b).maxCoeff(&best);
      hits += best == label ? 1 : 0;
    }
  }
  if (accuracy) *accuracy = static_cast<double>(hits) / images.size();
  return total / images.size();
}

void write_raw(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_raw(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::malformed_file, "checkpoint truncated");
}

}  // namespace

nlohmann::json architecture_to_json(const Architecture& a) {
  return {{"input_rows", a.input_rows}, {"input_cols", a.input_cols}, {"kernel", a.kernel},
          {"conv_maps", a.conv_maps},   {"hidden", a.hidden},         {"outputs", a.outputs}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.input_rows = j.value("input_rows", a.input_rows);
  a.input_cols = j.value("input_cols", a.input_cols);
  a.kernel = j.value("kernel", a.kernel);
  a.conv_maps = j.value("conv_maps", a.conv_maps);
  a.hidden = j.value("hidden", a.hidden);
  a.outputs = j.value("outputs", a.outputs);
  validate(a);
  return a;
}

std::size_t CnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

double& CnnModel::parameter(std::size_t i) {
  for (auto& l : layers) {
    if (i < l.weights.size()) return l.weights[i];
    i -= l.weights.size();
    if (i < l.bias.size()) return l.bias[i];
    i -= l.bias.size();
  }
  throw Error(ErrorCode::invalid_argument, "parameter index out of range");
}

Parameters zero_parameters(const Architecture& arch) {
  Parameters p;
  for (const auto& s : layer_shapes(arch))
    p.push_back(Layer{std::vector<double>(static_cast<std::size_t>(s.rows) * s.cols, 0.0),
                      std::vector<double>(s.rows, 0.0)});
  return p;
}

CnnBank init_bank(const Architecture& arch, int bank_size, int edge_clouds, std::uint64_t seed) {
  validate(arch);
  if (arch.outputs != edge_clouds)
    throw Error(ErrorCode::shape_mismatch, "architecture has " + std::to_string(arch.outputs) +
                                               " outputs for " + std::to_string(edge_clouds) + " edge clouds");
  if (bank_size <= 0) throw Error(ErrorCode::shape_mismatch, "bank needs at least one model");
  CnnBank bank;
  bank.arch = arch;
  bank.seed = seed;
  const auto shapes = layer_shapes(arch);
  for (int i = 0; i < bank_size; ++i) {
    CnnModel m;
    m.arch = arch;
    m.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    m.layers = zero_parameters(arch);
    std::mt19937_64 rng(m.seed);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      const double limit = std::sqrt(6.0 / shapes[l].cols);
      std::uniform_real_distribution<double> u(-limit, limit);
      for (double& w : m.layers[l].weights) w = u(rng);
    }
    bank.models.push_back(std::move(m));
  }
  return bank;
}

std::vector<double> forward(const CnnModel& m, std::span<const double> pixels) {
  const auto cache = forward_batch(m, {pixels});
  return {cache.probs.data(), cache.probs.data() + cache.probs.rows()};
}

std::vector<double> forward(const CnnModel& m, const FeatureImage& img) {
  if (img.flows != m.arch.input_rows || img.width() != m.arch.input_cols)
    throw Error(ErrorCode::shape_mismatch, "image is " + std::to_string(img.flows) + "x" +
                                               std::to_string(img.width()) + ", model expects " +
                                               std::to_string(m.arch.input_rows) + "x" +
                                               std::to_string(m.arch.input_cols));
  return forward(m, std::span<const double>(img.pixels));
}

double loss(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) throw Error(ErrorCode::shape_mismatch, "prediction and label differ in size");
  double total = 0.0;
  for (std::size_t e = 0; e < pred.size(); ++e)
    if (label[e] != 0.0) total -= label[e] * std::log(std::max(pred[e], kProbFloor));
  return total;
}

double loss(std::span<const double> pred, int label) {
  if (label < 0 || label >= static_cast<int>(pred.size()))
    throw Error(ErrorCode::shape_mismatch, "label " + std::to_string(label) + " out of range");
  return -std::log(std::max(pred[label], kProbFloor));
}

double accumulate_gradients(const CnnModel& m, const std::vector<std::span<const double>>& images,
                            const std::vector<int>& labels, Parameters& grads) {
  if (images.size() != labels.size()) throw Error(ErrorCode::shape_mismatch, "images and labels differ in count");
  if (images.empty()) return 0.0;
  const auto& a = m.arch;
  const auto shapes = layer_shapes(a);
  if (grads.size() != shapes.size()) throw Error(ErrorCode::shape_mismatch, "gradient set does not match model");
  const int convs = m.conv_layers();
  const int batch = static_cast<int>(images.size());
  for (int label : labels)
    if (label < 0 || label >= a.outputs) throw Error(ErrorCode::shape_mismatch, "label out of range");

  auto cache = forward_batch(m, images);
  double total = 0.0;
  Mat delta = cache.probs;
  for (int b = 0; b < batch; ++b) {
    total -= std::log(std::max(cache.probs(labels[b], b), kProbFloor));
    delta(labels[b], b) -= 1.0;
  }

  for (int layer = static_cast<int>(shapes.size()) - 1; layer >= convs; --layer) {
    const Mat& in = cache.dense_in[layer - convs];
    add_outer(grads[layer], delta, in);
    if (layer == 0) break;
    Mat back = weights_of(m, layer, shapes[layer]).transpose() * delta;
    delta = back.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
  }
  if (convs == 0) return total;

  for (int b = 0; b < batch; ++b) {
    Mat d = Eigen::Map<const Mat>(delta.col(b).data(), shapes[convs - 1].rows, a.input_size());
    for (int c = convs - 1; c >= 0; --c) {
      add_outer(grads[c], d, cache.patches[b][c]);
      if (c == 0) break;
      const Mat dcol = weights_of(m, c, shapes[c]).transpose() * d;
      const Mat& below = cache.maps[b][c - 1];
      d = col2im(dcol, static_cast<int>(below.rows()), a.input_rows, a.input_cols, a.kernel)
              .cwiseProduct((below.array() > 0.0).cast<double>().matrix());
    }
  }
  return total;
}

Parameters gradients(const CnnModel& m, std::span<const double> pixels, int label) {
  auto grads = zero_parameters(m.arch);
  accumulate_gradients(m, {pixels}, {label}, grads);
  return grads;
}

Parameters gradients(const CnnModel& m, const FeatureImage& img, int label) {
  if (img.flows != m.arch.input_rows || img.width() != m.arch.input_cols)
    throw Error(ErrorCode::shape_mismatch, "image does not match model input");
  return gradients(m, std::span<const double>(img.pixels), label);
}

nlohmann::json train_report_to_json(const TrainReport& r) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : r.models)
    models.push_back({{"train_loss", m.train_loss},
                      {"test_loss", m.test_loss},
                      {"train_accuracy", m.train_accuracy},
                      {"test_accuracy", m.test_accuracy},
                      {"train_samples", m.train_samples},
                      {"test_samples", m.test_samples}});
  return {{"models", models}, {"seconds", r.seconds}};
}

TrainReport train_bank(CnnBank& bank, const Dataset& data, const TrainOptions& opts, const EpochFn& progress) {
  if (data.train.empty()) throw Error(ErrorCode::empty_dataset, "no training samples");
  if (opts.batch <= 0 || opts.epochs < 0 || !(opts.learning_rate > 0.0))
    throw Error(ErrorCode::invalid_argument, "invalid training options");
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::vector<double>> images(data.samples.size());
  auto prepare = [&](int i) {
    const auto& s = data.samples.at(i);
    if (!s.label) throw Error(ErrorCode::empty_dataset, "sample " + std::to_string(i) + " has no label");
    if (s.instance.num_flows() != bank.size() || static_cast<int>(s.label->placement.size()) != bank.size())
      throw Error(ErrorCode::shape_mismatch, "sample " + std::to_string(i) + " has " +
                                                 std::to_string(s.instance.num_flows()) + " flows for a bank of " +
                                                 std::to_string(bank.size()));
    if (images[i].empty()) images[i] = encode_image(s.instance).pixels;
  };
  for (int i : data.train) prepare(i);
  for (int i : data.test) prepare(i);

  TrainReport report;
  report.models.resize(bank.size());
  parallel_for(bank.size(), opts.threads, [&](int k) {
    auto& model = bank.models[k];
    auto& rep = report.models[k];
    std::vector<std::span<const double>> train_x, test_x;
    std::vector<int> train_y, test_y;
    for (int i : data.train)
      if (int e = data.samples[i].label->placement[k]; e >= 0) {
        train_x.emplace_back(images[i]);
        train_y.push_back(e);
      }
    for (int i : data.test)
      if (int e = data.samples[i].label->placement[k]; e >= 0) {
        test_x.emplace_back(images[i]);
        test_y.push_back(e);
      }
    rep.train_samples = static_cast<int>(train_x.size());
    rep.test_samples = static_cast<int>(test_x.size());
    rep.train_loss.push_back(mean_loss(model, train_x, train_y, nullptr));
    rep.test_loss.push_back(mean_loss(model, test_x, test_y, nullptr));
    if (train_x.empty()) return;

    auto velocity = zero_parameters(model.arch);
    auto grads = zero_parameters(model.arch);
    std::vector<int> order(train_x.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
      std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0.0;
      for (std::size_t first = 0; first < order.size(); first += opts.batch) {
        for (auto& g : grads) {
          std::fill(g.weights.begin(), g.weights.end(), 0.0);
          std::fill(g.bias.begin(), g.bias.end(), 0.0);
        }
        const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(opts.batch));
        std::vector<std::span<const double>> xs;
        std::vector<int> ys;
        for (std::size_t i = first; i < last; ++i) {
          xs.push_back(train_x[order[i]]);
          ys.push_back(train_y[order[i]]);
        }
        epoch_loss += accumulate_gradients(model, xs, ys, grads);
        const double step = opts.learning_rate / static_cast<double>(xs.size());
        for (std::size_t l = 0; l < grads.size(); ++l) {
          auto update = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
            for (std::size_t i = 0; i < w.size(); ++i) {
              v[i] = opts.momentum * v[i] - step * g[i];
              w[i] += v[i];
            }
          };
          update(model.layers[l].weights, velocity[l].weights, grads[l].weights);
          update(model.layers[l].bias, velocity[l].bias, grads[l].bias);
        }
      }
      rep.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
      rep.test_loss.push_back(mean_loss(model, test_x, test_y, nullptr));
      if (progress) progress(k, epoch + 1, rep.train_loss.back());
    }
    mean_loss(model, train_x, train_y, &rep.train_accuracy);
    mean_loss(model, test_x, test_y, &rep.test_accuracy);
  });
  bank.epoch += opts.epochs;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// Layout: 8-byte magic, u32 version, u64 header length, JSON header, then
// every model's layers as raw native doubles (weights, then bias).
void save_bank(const std::string& path, const CnnBank& bank) {
  nlohmann::json header = {{"architecture", architecture_to_json(bank.arch)},
                           {"seed", bank.seed},
                           {"epoch", bank.epoch},
                           {"models", bank.size()}};
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& m : bank.models) seeds.push_back(m.seed);
  header["model_seeds"] = seeds;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& m : bank.models)
    for (const auto& l : m.layers) {
      write_raw(out, l.weights);
      write_raw(out, l.bias);
    }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path);
}

CnnBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path);
  char magic[sizeof kMagic];
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(ErrorCode::malformed_file, path + " is not a model checkpoint");
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in) throw Error(ErrorCode::malformed_file, "checkpoint truncated");
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::version_mismatch, "checkpoint version " + std::to_string(version));
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || length > (1u << 24)) throw Error(ErrorCode::malformed_file, "bad checkpoint header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorCode::malformed_file, "checkpoint truncated");

  CnnBank bank;
  try {
    const auto header = nlohmann::json::parse(text);
    bank.arch = architecture_from_json(header.at("architecture"));
    bank.seed = header.at("seed").get<std::uint64_t>();
    bank.epoch = header.at("epoch").get<int>();
    const auto seeds = header.at("model_seeds").get<std::vector<std::uint64_t>>();
    if (static_cast<int>(seeds.size()) != header.at("models").get<int>())
      throw Error(ErrorCode::malformed_file, "model count mismatch");
    for (auto seed : seeds) {
      CnnModel m;
      m.arch = bank.arch;
      m.seed = seed;
      m.layers = zero_parameters(bank.arch);
      bank.models.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_file, std::string("checkpoint header: ") + e.what());
  }
  for (auto& m : bank.models)
    for (auto& l : m.layers) {
      read_raw(in, l.weights);
      read_raw(in, l.bias);
    }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::malformed_file, "trailing checkpoint data");
  return bank;
}

}  // namespace edgecache
