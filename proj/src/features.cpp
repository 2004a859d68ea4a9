#include "edgecache/features.hpp"

#include <algorithm>
#include <cmath>

#include "edgecache/error.hpp"

namespace edgecache {

namespace {

double ratio(double demand, double residual) {
  if (residual <= 0.0) return 1.0;
  return std::min(1.0, demand / residual);
}

double& pixel(FeatureImage& img, int k, int col) {
  return img.pixels[static_cast<std::size_t>(k) * img.width() + col];
}

}  // namespace

std::vector<double> FeatureImage::block(int first, int count) const {
  std::vector<double> out(static_cast<std::size_t>(count) * width(), 0.0);
  for (int i = 0; i < count && first + i < flows; ++i)
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(first + i) * width(), width(),
                out.begin() + static_cast<std::ptrdiff_t>(i) * width());
  return out;
}

FeatureImage encode_image(const Instance& inst) {
  FeatureImage img;
  img.flows = inst.num_flows();
  img.access_routers = inst.num_access_routers;
  img.edge_clouds = inst.num_edge_clouds;
  img.links = inst.num_links;
  img.pixels.assign(static_cast<std::size_t>(img.flows) * img.width(), 0.0);
  img.residual_storage = inst.ec_capacity;
  img.residual_bandwidth = inst.link_capacity;
  img.committed.assign(img.flows, 0);
  for (int k = 0; k < img.flows; ++k) {
    const auto& f = inst.flows[k];
    img.storage_demand.push_back(f.storage);
    img.bandwidth_demand.push_back(f.bandwidth);
    for (int a = 0; a < img.access_routers; ++a) pixel(img, k, a) = std::min(1.0, f.mobility[a]);
    for (int e = 0; e < img.edge_clouds; ++e)
      pixel(img, k, img.access_routers + e) = ratio(f.storage, inst.ec_capacity[e]);
    for (int l = 0; l < img.links; ++l)
      pixel(img, k, img.access_routers + img.edge_clouds + l) = ratio(f.bandwidth, inst.link_capacity[l]);
  }
  return img;
}

FeatureImage update_image(const FeatureImage& img, const PathTables& pt,
                          const std::vector<Commitment>& commitments) {
  FeatureImage out = img;
  if (commitments.empty()) return out;
  for (const auto& c : commitments) {
    if (c.flow < 0 || c.flow >= img.flows) throw Error(ErrorCode::unknown_flow, std::to_string(c.flow));
    if (c.cloud < 0 || c.cloud >= img.edge_clouds)
      throw Error(ErrorCode::unknown_edge_cloud, std::to_string(c.cloud));
    if (c.router < 0 || c.router >= img.access_routers)
      throw Error(ErrorCode::invalid_argument, "unknown access router " + std::to_string(c.router));
    if (out.committed[c.flow])
      throw Error(ErrorCode::invalid_argument, "flow " + std::to_string(c.flow) + " committed twice");
    out.committed[c.flow] = 1;
    out.residual_storage[c.cloud] -= img.storage_demand[c.flow];
    for (int l = 0; l < img.links; ++l)
      if (pt.on_path(l, c.router, c.cloud)) out.residual_bandwidth[l] -= img.bandwidth_demand[c.flow];
  }
  for (int k = 0; k < out.flows; ++k) {
    if (out.committed[k]) continue;
    for (int e = 0; e < out.edge_clouds; ++e)
      pixel(out, k, out.access_routers + e) = ratio(out.storage_demand[k], out.residual_storage[e]);
    for (int l = 0; l < out.links; ++l)
      pixel(out, k, out.access_routers + out.edge_clouds + l) =
          ratio(out.bandwidth_demand[k], out.residual_bandwidth[l]);
  }
  return out;
}

std::string export_pgm(const FeatureImage& img) {
  std::string out = "P5 " + std::to_string(img.width()) + " " + std::to_string(img.flows) + " 255\n";
  for (double v : img.pixels)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)))));
  return out;
}

}  // namespace edgecache
