#include "octimls/losses.hpp"

#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <sstream>

namespace octimls {

namespace {

void reduce_tables(std::vector<GradientTable>& tables) {
  for (std::size_t stride = 1; stride < tables.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < tables.size(); i += 2 * stride) {
      auto& dst = tables[i];
      const auto& src = tables[i + stride];
      for (std::size_t k = 0; k < dst.size(); ++k) {
        dst[k].position += src[k].position;
        dst[k].normal += src[k].normal;
        dst[k].radius += src[k].radius;
      }
    }
  }
}

void add_into(GradientTable& dst, const GradientTable& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst[k].position += src[k].position;
    dst[k].normal += src[k].normal;
    dst[k].radius += src[k].radius;
  }
}

void check_table(const GradientTable* grad, std::size_t n) {
  if (grad && grad->size() != n) throw Error("shape-mismatch", "gradient table size differs from point count");
}

// Runs body(chunk_begin, chunk_end, local_table) -> partial value over a fixed
// chunking of [0, n), then combines values and gradient tables in tree order.
template <typename Body>
double accumulate_chunks(std::size_t n, std::size_t num_points, GradientTable* grad, Body&& body) {
  const auto plan = plan_chunks(n, 1024, 16);
  std::vector<double> partial(plan.count, 0.0);
  std::vector<GradientTable> tables(grad ? plan.count : 0);
  parallel_for(plan.count, [&](std::size_t c) {
    GradientTable* local = nullptr;
    if (grad) {
      tables[c].assign(num_points, PointGradient{});
      local = &tables[c];
    }
    partial[c] = body(plan.begin(c), plan.end(c), local);
  });
  if (grad && !tables.empty()) {
    reduce_tables(tables);
    add_into(*grad, tables.front());
  }
  return pairwise_sum(partial);
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {octree, sdf_level6, sdf_level7, gradient, repulsion, projection, radius, weight_decay})
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("invalid-weights", "loss weights must be finite and >= 0");
}

double bilateral_weight(const MlsPoint& i, const MlsPoint& j) {
  const double d2 = (i.position - j.position).squaredNorm();
  return std::exp(-d2 / (j.radius * j.radius) - (1.0 - i.normal.dot(j.normal)));
}

SampleNeighbors freeze_sample_neighbors(const ImlsFunction& f, const SdfSampleSet& samples) {
  std::vector<std::vector<std::uint32_t>> rows(samples.size());
  const auto plan = plan_chunks(samples.size(), 1024, 64);
  const auto pts = f.set().points();
  parallel_for(plan.count, [&](std::size_t c) {
    for (std::size_t s = plan.begin(c); s < plan.end(c); ++s) {
      const auto nbrs = f.neighbors(samples[s].position);
      const auto k = imls_kernel(samples[s].position, pts, nbrs, f.options().weight_epsilon);
      if (!k.in_band) continue;
      for (const auto& n : nbrs) rows[s].push_back(n.index);
    }
  });
  SampleNeighbors out;
  out.offsets.reserve(samples.size() + 1);
  for (const auto& row : rows) {
    if (row.empty()) ++out.out_of_band;
    out.indices.insert(out.indices.end(), row.begin(), row.end());
    out.offsets.push_back(static_cast<std::uint32_t>(out.indices.size()));
  }
  return out;
}

PointNeighbors freeze_point_neighbors(const MlsNeighborIndex& index, std::size_t k) {
  const auto& set = index.set();
  const auto pts = set.points();
  std::vector<std::vector<Neighbor>> rows(set.size());
  const double cutoff = set.neighbor_cutoff();
  parallel_for(set.size(), [&](std::size_t i) {
    rows[i] = index.query(pts[i].position, k, cutoff, static_cast<std::uint32_t>(i));
  });
  PointNeighbors out;
  out.offsets.reserve(set.size() + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& n : rows[i]) {
      out.indices.push_back(n.index);
      out.weights.push_back(bilateral_weight(pts[i], pts[n.index]));
    }
    out.offsets.push_back(static_cast<std::uint32_t>(out.indices.size()));
  }
  return out;
}

SdfLossTerms sdf_loss(std::span<const MlsPoint> points, const SdfSampleSet& samples,
                      const SampleNeighbors& neighbors, const LossWeights& w, GradientTable* grad) {
  check_table(grad, points.size());
  if (neighbors.size() != samples.size()) throw Error("shape-mismatch", "neighbor rows differ from sample count");
  SdfLossTerms terms;
  const auto plan = plan_chunks(samples.size(), 1024, 16);
  std::vector<double> value_part(plan.count, 0.0), gradient_part(plan.count, 0.0);
  std::vector<std::size_t> used(plan.count, 0);
  std::vector<GradientTable> tables(grad ? plan.count : 0);

  parallel_for(plan.count, [&](std::size_t c) {
    GradientTable* local = nullptr;
    if (grad) {
      tables[c].assign(points.size(), PointGradient{});
      local = &tables[c];
    }
    std::vector<double> theta_buf;
    for (std::size_t s = plan.begin(c); s < plan.end(c); ++s) {
      const auto row = neighbors.row(s);
      if (row.empty()) continue;
      const SdfSample& sample = samples[s];
      const Vec3& q = sample.position;

      double shift = std::numeric_limits<double>::infinity();
      for (std::uint32_t i : row) {
        const auto& p = points[i];
        shift = std::min(shift, (q - p.position).squaredNorm() / (p.radius * p.radius));
      }
      theta_buf.resize(row.size());
      double b = 0.0, a = 0.0;
      Vec3 g_sum = Vec3::Zero();
      for (std::size_t k = 0; k < row.size(); ++k) {
        const auto& p = points[row[k]];
        const Vec3 diff = q - p.position;
        const double t = std::exp(-(diff.squaredNorm() / (p.radius * p.radius) - shift));
        theta_buf[k] = t;
        b += t;
        a += t * diff.dot(p.normal);
        g_sum += t * p.normal;
      }
      const double f = a / b;
      const Vec3 g = g_sum / b;
      const double lambda_s = w.sdf_for_level(sample.level);
      const double err = f - sample.value;
      const double align = 1.0 - g.dot(sample.gradient);
      value_part[c] += lambda_s * err * err;
      gradient_part[c] += w.gradient * std::abs(align);
      ++used[c];

      if (!local) continue;
      const double c_f = 2.0 * lambda_s * err;
      const double sgn = align > 0.0 ? 1.0 : (align < 0.0 ? -1.0 : 0.0);
      const Vec3 c_g = -w.gradient * sgn * sample.gradient;
      for (std::size_t k = 0; k < row.size(); ++k) {
        const auto& p = points[row[k]];
        auto& out = (*local)[row[k]];
        const Vec3 diff = q - p.position;
        const double t = theta_buf[k];
        const double r2 = p.radius * p.radius;
        const double d_theta = (c_f * (diff.dot(p.normal) - f) + c_g.dot(p.normal - g)) / b;
        out.position += d_theta * t * 2.0 * diff / r2 - c_f * t / b * p.normal;
        out.normal += c_f * t / b * diff + (t / b) * c_g;
        out.radius += d_theta * t * 2.0 * diff.squaredNorm() / (r2 * p.radius);
      }
    }
  });

  if (grad && !tables.empty()) {
    reduce_tables(tables);
    add_into(*grad, tables.front());
  }
  terms.value_term = pairwise_sum(value_part);
  terms.gradient_term = pairwise_sum(gradient_part);
  for (std::size_t u : used) terms.used += u;
  terms.skipped = samples.size() - terms.used;
  return terms;
}

double repulsion_loss(std::span<const MlsPoint> points, const PointNeighbors& nb, const LossWeights& w,
                      GradientTable* grad) {
  check_table(grad, points.size());
  return accumulate_chunks(points.size(), points.size(), grad,
                           [&](std::size_t begin, std::size_t end, GradientTable* local) {
                             double sum = 0.0;
                             for (std::size_t i = begin; i < end; ++i) {
                               const auto& pi = points[i];
                               for (std::uint32_t s = nb.offsets[i]; s < nb.offsets[i + 1]; ++s) {
                                 const auto j = nb.indices[s];
                                 const double wij = nb.weights[s];
                                 const Vec3 e = pi.position - points[j].position;
                                 const double ne = pi.normal.dot(e);
                                 const Vec3 t = e - pi.normal * ne;
                                 const double len = t.norm();
                                 sum -= w.repulsion * wij * len;
                                 if (!local || !(len > 0.0)) continue;
                                 const double nt = pi.normal.dot(t);
                                 const Vec3 d_e = (t - pi.normal * nt) / len;
                                 const Vec3 d_n = (-ne * t - nt * e) / len;
                                 const double c = -w.repulsion * wij;
                                 (*local)[i].position += c * d_e;
                                 (*local)[j].position -= c * d_e;
                                 (*local)[i].normal += c * d_n;
                               }
                             }
                             return sum;
                           });
}

double projection_loss(std::span<const MlsPoint> points, const PointNeighbors& nb, const LossWeights& w,
                       GradientTable* grad) {
  check_table(grad, points.size());
  return accumulate_chunks(points.size(), points.size(), grad,
                           [&](std::size_t begin, std::size_t end, GradientTable* local) {
                             double sum = 0.0;
                             for (std::size_t i = begin; i < end; ++i) {
                               const auto& pi = points[i];
                               for (std::uint32_t s = nb.offsets[i]; s < nb.offsets[i + 1]; ++s) {
                                 const auto j = nb.indices[s];
                                 const double wij = nb.weights[s];
                                 const Vec3 e = pi.position - points[j].position;
                                 const double ne = pi.normal.dot(e);
                                 sum += w.projection * wij * ne * ne;
                                 if (!local) continue;
                                 const double c = 2.0 * w.projection * wij * ne;
                                 (*local)[i].position += c * pi.normal;
                                 (*local)[j].position -= c * pi.normal;
                                 (*local)[i].normal += c * e;
                               }
                             }
                             return sum;
                           });
}

double radius_loss(std::span<const MlsPoint> points, const PointNeighbors& nb, const LossWeights& w,
                   GradientTable* grad) {
  check_table(grad, points.size());
  return accumulate_chunks(points.size(), points.size(), grad,
                           [&](std::size_t begin, std::size_t end, GradientTable* local) {
                             double sum = 0.0;
                             for (std::size_t i = begin; i < end; ++i) {
                               if (nb.offsets[i] == nb.offsets[i + 1]) continue;
                               double wsum = 0.0, rsum = 0.0;
                               for (std::uint32_t s = nb.offsets[i]; s < nb.offsets[i + 1]; ++s) {
                                 wsum += nb.weights[s];
                                 rsum += nb.weights[s] * points[nb.indices[s]].radius;
                               }
                               if (!(wsum > 0.0)) continue;
                               const double delta = points[i].radius - rsum / wsum;
                               sum += w.radius * delta * delta;
                               if (!local) continue;
                               const double c = 2.0 * w.radius * delta;
                               (*local)[i].radius += c;
                               for (std::uint32_t s = nb.offsets[i]; s < nb.offsets[i + 1]; ++s)
                                 (*local)[nb.indices[s]].radius -= c * nb.weights[s] / wsum;
                             }
                             return sum;
                           });
}

SdfLossTerms sdf_loss(const MlsPointSet& mls, const SdfSampleSet& samples, const LossWeights& w,
                      GradientTable* grad) {
  const ImlsFunction f(mls);
  return sdf_loss(mls.points(), samples, freeze_sample_neighbors(f, samples), w, grad);
}

double repulsion_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad) {
  const MlsNeighborIndex index(mls);
  return repulsion_loss(mls.points(), freeze_point_neighbors(index), w, grad);
}

double projection_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad) {
  const MlsNeighborIndex index(mls);
  return projection_loss(mls.points(), freeze_point_neighbors(index), w, grad);
}

double radius_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad) {
  const MlsNeighborIndex index(mls);
  return radius_loss(mls.points(), freeze_point_neighbors(index), w, grad);
}

double octree_structure_loss(std::span<const OccupancyPrediction> predictions, const LossWeights& w) {
  double total = 0.0;
  for (const auto& pred : predictions) {
    if (pred.logits.size() != pred.labels.size())
      throw Error("shape-mismatch", "logit and label counts differ at level " + std::to_string(pred.level));
    if (pred.level < 3 || pred.logits.empty()) continue;
    std::vector<double> terms(pred.logits.size());
    for (std::size_t i = 0; i < pred.logits.size(); ++i) {
      const double x = pred.logits[i];
      const double y = pred.labels[i] ? 1.0 : 0.0;
      // log(1 + exp(-|x|)) form of the sigmoid cross-entropy.
      terms[i] = std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    total += pairwise_sum(terms) / static_cast<double>(pred.logits.size());
  }
  return w.octree * total;
}

std::string LossReport::to_text() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "total=" << total << "\nsdf=" << sdf << "\ngrad=" << gradient << "\nrep=" << repulsion
      << "\nproj=" << projection << "\nrad=" << radius << "\noct=" << octree << "\nwd=" << weight_decay
      << "\nsamples_used=" << samples_used << "\nsamples_skipped=" << samples_skipped << '\n';
  return out.str();
}

LossReport total_loss(std::span<const MlsPoint> points, const SdfSampleSet& samples,
                      const SampleNeighbors& sample_neighbors, const PointNeighbors& point_neighbors,
                      std::span<const OccupancyPrediction> predictions, std::span<const double> raw_params,
                      const LossWeights& w) {
  w.validate();
  LossReport report;
  report.point_gradients.assign(points.size(), PointGradient{});
  auto* grad = &report.point_gradients;

  const auto sdf = sdf_loss(points, samples, sample_neighbors, w, grad);
  report.sdf = sdf.value_term;
  report.gradient = sdf.gradient_term;
  report.samples_used = sdf.used;
  report.samples_skipped = sdf.skipped;
  report.repulsion = repulsion_loss(points, point_neighbors, w, grad);
  report.projection = projection_loss(points, point_neighbors, w, grad);
  report.radius = radius_loss(points, point_neighbors, w, grad);
  report.octree = octree_structure_loss(predictions, w);

  std::vector<double> squares(raw_params.size());
  report.raw_gradients.resize(raw_params.size());
  for (std::size_t i = 0; i < raw_params.size(); ++i) {
    squares[i] = raw_params[i] * raw_params[i];
    report.raw_gradients[i] = 2.0 * w.weight_decay * raw_params[i];
  }
  report.weight_decay = w.weight_decay * pairwise_sum(squares);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 n = points[i].normal.normalized();
    auto& gn = report.point_gradients[i].normal;
    gn -= n * n.dot(gn);
  }

  const double parts[] = {report.sdf,        report.gradient, report.repulsion,   report.projection,
                          report.radius,     report.octree,   report.weight_decay};
  report.total = 0.0;
  for (double p : parts) report.total += p;
  return report;
}

LossReport total_loss(const MlsPointSet& mls, const SdfSampleSet& samples,
                      std::span<const OccupancyPrediction> predictions, std::span<const double> raw_params,
                      const LossWeights& w) {
  const ImlsFunction f(mls);
  return total_loss(mls.points(), samples, freeze_sample_neighbors(f, samples), freeze_point_neighbors(f.index()),
                    predictions, raw_params, w);
}

}  // namespace octimls
