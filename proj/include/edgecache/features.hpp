#pragma once

#include <string>
#include <vector>

#include "edgecache/scenario.hpp"
#include "edgecache/topology.hpp"

namespace edgecache {

/// Grayscale encoding of an instance: one row per flow, columns
/// [p_ka | q_ke | r_kl] with q = s_k / w_e and r = b_k / c_l, clamped to 1.
/// Also carries the demands and residual capacities needed to re-encode
/// after some flows have been committed to an EC.
struct FeatureImage {
  int flows = 0;
  int access_routers = 0;
  int edge_clouds = 0;
  int links = 0;
  std::vector<double> pixels;  // row-major, flows x width()

  std::vector<double> storage_demand;    // s_k
  std::vector<double> bandwidth_demand;  // b_k
  std::vector<double> residual_storage;  // w_e minus committed storage
  std::vector<double> residual_bandwidth;
  std::vector<std::uint8_t> committed;

  int width() const { return access_routers + edge_clouds + links; }
  double at(int k, int col) const { return pixels[static_cast<std::size_t>(k) * width() + col]; }
  double p(int k, int a) const { return at(k, a); }
  double q(int k, int e) const { return at(k, access_routers + e); }
  double r(int k, int l) const { return at(k, access_routers + edge_clouds + l); }

  /// `count` rows starting at `first`; rows past the end are zero.
  std::vector<double> block(int first, int count) const;
};

FeatureImage encode_image(const Instance& inst);

/// Flow `flow` cached at EC `cloud`, served over the stored path from `router`.
struct Commitment {
  int flow = 0;
  int cloud = 0;
  int router = 0;
};

/// Subtracts committed storage and bandwidth, then re-encodes q and r for the
/// flows still uncommitted. Committed rows keep their values.
FeatureImage update_image(const FeatureImage& img, const PathTables& pt,
                          const std::vector<Commitment>& commitments);

/// 8-bit binary PGM, pixel = round(255 * value). Debug output only.
std::string export_pgm(const FeatureImage& img);

}  // namespace edgecache
