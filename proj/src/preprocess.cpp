/*
 * flairhi - FLAIR hyperintensity enhancement toolkit
 *
 * Copyright 2026 the flairhi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flairhi/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flairhi/parallel.hpp"

namespace flairhi {

void NlmParams::validate() const {
  if (patch_radius < 1 || search_radius < 1)
    throw DomainError("nlm: radii must be >= 1");
  if (!(sigma > 0.0))
    throw DomainError("nlm: sigma must be > 0");
  if (!(filter_h > 0.0))
    throw DomainError("nlm: filter_h must be > 0");
}

namespace {

struct Box {
  int lo[3];
  int hi[3]; // inclusive
  bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
  int extent(int d) const { return hi[d] - lo[d] + 1; }
};

Box mask_bounding_box(const BinaryMask& mask) {
  Box b{{mask.nx(), mask.ny(), mask.nz()}, {-1, -1, -1}};
  for (int z = 0; z < mask.nz(); ++z)
    for (int y = 0; y < mask.ny(); ++y) {
      const std::size_t row = mask.index(0, y, z);
      for (int x = 0; x < mask.nx(); ++x) {
        if (mask.bits()[row + static_cast<std::size_t>(x)]) {
          b.lo[0] = std::min(b.lo[0], x);
          b.hi[0] = std::max(b.hi[0], x);
          b.lo[1] = std::min(b.lo[1], y);
          b.hi[1] = std::max(b.hi[1], y);
          b.lo[2] = std::min(b.lo[2], z);
          b.hi[2] = std::max(b.hi[2], z);
        }
      }
    }
  return b;
}

/// Centered moving-window sum of radius r along one axis of a 3D buffer,
/// zero-padded at the buffer edges. Rows are processed independently so the
/// result is identical for any worker count.
void box_sum_axis(const std::vector<double>& in, std::vector<double>& out,
                  int nx, int ny, int nz, int axis, int r, int threads) {
  const std::int64_t sx = 1;
  const std::int64_t sy = nx;
  const std::int64_t sz = static_cast<std::int64_t>(nx) * ny;
  std::int64_t stride, len, rows, row_sa, row_sb, na, nb;
  if (axis == 0) {
    stride = sx; len = nx; na = ny; nb = nz; row_sa = sy; row_sb = sz;
  } else if (axis == 1) {
    stride = sy; len = ny; na = nx; nb = nz; row_sa = sx; row_sb = sz;
  } else {
    stride = sz; len = nz; na = nx; nb = ny; row_sa = sx; row_sb = sy;
  }
  rows = na * nb;
  parallel_chunks(rows, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t row = begin; row < end; ++row) {
      const std::int64_t a = row % na;
      const std::int64_t b = row / na;
      const double* src = in.data() + a * row_sa + b * row_sb;
      double* dst = out.data() + a * row_sa + b * row_sb;
      double acc = 0.0;
      const std::int64_t head = std::min<std::int64_t>(r, len - 1);
      for (std::int64_t i = 0; i <= head; ++i)
        acc += src[i * stride];
      dst[0] = acc;
      for (std::int64_t i = 1; i < len; ++i) {
        if (i + r < len)
          acc += src[(i + r) * stride];
        if (i - r - 1 >= 0)
          acc -= src[(i - r - 1) * stride];
        dst[i * stride] = acc;
      }
    }
  }, threads);
}

// Valid span along one axis for positions x with both x and x+t in bounds.
inline void valid_span(int n, int t, int& lo, int& hi) {
  lo = std::max(0, -t);
  hi = n - 1 - std::max(0, t);
}

inline int overlap_count(int c, int r, int lo, int hi) {
  return std::max(0, std::min(c + r, hi) - std::max(c - r, lo) + 1);
}

} // namespace

Volume3D nlm_denoise(const Volume3D& vol, const BinaryMask& mask,
                     const NlmParams& params) {
  require_same_dims(vol.dims(), mask.dims(), "nlm_denoise");
  params.validate();

  Volume3D out = vol;
  Box mbox = mask_bounding_box(mask);
  if (mbox.empty())
    return out;

  const int nx = vol.nx(), ny = vol.ny(), nz = vol.nz();
  const int pr = params.patch_radius;
  const int sr = params.search_radius;
  const double two_sigma2 = 2.0 * params.sigma * params.sigma;
  const double inv_h2 = 1.0 / (params.filter_h * params.filter_h);

  // Working region: mask bounding box grown by the patch radius. Every patch
  // position of a masked voxel lies inside it.
  Box wb;
  for (int d = 0; d < 3; ++d) {
    wb.lo[d] = std::max(0, mbox.lo[d] - pr);
    wb.hi[d] = std::min(vol.dims()[d] - 1, mbox.hi[d] + pr);
  }
  const int bnx = wb.extent(0), bny = wb.extent(1), bnz = wb.extent(2);
  const std::int64_t bsize = static_cast<std::int64_t>(bnx) * bny * bnz;

  std::vector<double> diff(static_cast<std::size_t>(bsize));
  std::vector<double> tmp(static_cast<std::size_t>(bsize));
  std::vector<double> patch_sum(static_cast<std::size_t>(bsize));
  std::vector<double> acc_w(vol.size(), 0.0);
  std::vector<double> acc_res(vol.size(), 0.0);

  const auto& data = vol.data();
  const auto& bits = mask.bits();
  const std::int64_t vsy = nx;
  const std::int64_t vsz = static_cast<std::int64_t>(nx) * ny;

  // Offsets are visited in a fixed order and each pass writes disjoint
  // per-voxel slots, so the accumulation is reduction-order free.
  for (int tz = -sr; tz <= sr; ++tz) {
    for (int ty = -sr; ty <= sr; ++ty) {
      for (int tx = -sr; tx <= sr; ++tx) {
        int vlo[3], vhi[3];
        valid_span(nx, tx, vlo[0], vhi[0]);
        valid_span(ny, ty, vlo[1], vhi[1]);
        valid_span(nz, tz, vlo[2], vhi[2]);
        // Clip to the working region.
        int rlo[3], rhi[3];
        bool dead = false;
        for (int d = 0; d < 3; ++d) {
          rlo[d] = std::max(vlo[d], wb.lo[d]);
          rhi[d] = std::min(vhi[d], wb.hi[d]);
          if (rlo[d] > rhi[d])
            dead = true;
        }
        if (dead)
          continue;

        const std::int64_t toff = tx + ty * vsy + tz * vsz;

        // Squared differences over the valid part of the working region,
        // zero elsewhere.
        parallel_chunks(bnz, [&](std::int64_t zb, std::int64_t ze) {
          for (std::int64_t bz = zb; bz < ze; ++bz) {
            const int z = wb.lo[2] + static_cast<int>(bz);
            const bool zin = z >= rlo[2] && z <= rhi[2];
            for (int by = 0; by < bny; ++by) {
              const int y = wb.lo[1] + by;
              const bool yin = zin && y >= rlo[1] && y <= rhi[1];
              double* drow = diff.data() + (bz * bny + by) * bnx;
              const std::size_t vrow = static_cast<std::size_t>(z) * vsz +
                                       static_cast<std::size_t>(y) * vsy;
              for (int bx = 0; bx < bnx; ++bx) {
                const int x = wb.lo[0] + bx;
                if (yin && x >= rlo[0] && x <= rhi[0]) {
                  const std::size_t i = vrow + static_cast<std::size_t>(x);
                  const double d = data[i] - data[i + toff];
                  drow[bx] = d * d;
                } else {
                  drow[bx] = 0.0;
                }
              }
            }
          }
        });

        box_sum_axis(diff, tmp, bnx, bny, bnz, 0, pr, 0);
        box_sum_axis(tmp, patch_sum, bnx, bny, bnz, 1, pr, 0);
        box_sum_axis(patch_sum, tmp, bnx, bny, bnz, 2, pr, 0);
        const std::vector<double>& psum = tmp;

        // Weighted accumulation at masked voxels whose search partner is
        // masked as well.
        const int alo_z = std::max(rlo[2], mbox.lo[2]);
        const int ahi_z = std::min(rhi[2], mbox.hi[2]);
        if (alo_z > ahi_z)
          continue;
        parallel_chunks(ahi_z - alo_z + 1, [&](std::int64_t zb, std::int64_t ze) {
          for (std::int64_t iz = zb; iz < ze; ++iz) {
            const int z = alo_z + static_cast<int>(iz);
            const int cz = overlap_count(z, pr, vlo[2], vhi[2]);
            for (int y = std::max(rlo[1], mbox.lo[1]);
                 y <= std::min(rhi[1], mbox.hi[1]); ++y) {
              const int cy = overlap_count(y, pr, vlo[1], vhi[1]);
              const std::size_t vrow = static_cast<std::size_t>(z) * vsz +
                                       static_cast<std::size_t>(y) * vsy;
              const double* prow = psum.data() +
                                   ((static_cast<std::int64_t>(z) - wb.lo[2]) * bny +
                                    (y - wb.lo[1])) * bnx - wb.lo[0];
              for (int x = std::max(rlo[0], mbox.lo[0]);
                   x <= std::min(rhi[0], mbox.hi[0]); ++x) {
                const std::size_t i = vrow + static_cast<std::size_t>(x);
                if (!bits[i] || !bits[i + toff])
                  continue;
                const int cnt = overlap_count(x, pr, vlo[0], vhi[0]) * cy * cz;
                const double d2 = prow[x] / static_cast<double>(cnt);
                const double u = d2 - two_sigma2;
                const double w = u > 0.0 ? std::exp(-u * inv_h2) : 1.0;
                acc_w[i] += w;
                acc_res[i] += w * (data[i + toff] - data[i]);
              }
            }
          }
        });
      }
    }
  }

  // Residual form: a constant volume yields zero residuals and is returned
  // bit-exactly.
  parallel_chunks(static_cast<std::int64_t>(vol.size()),
                  [&](std::int64_t begin, std::int64_t end) {
                    for (std::int64_t i = begin; i < end; ++i)
                      if (bits[static_cast<std::size_t>(i)])
                        out[static_cast<std::size_t>(i)] =
                            data[static_cast<std::size_t>(i)] +
                            acc_res[static_cast<std::size_t>(i)] /
                                acc_w[static_cast<std::size_t>(i)];
                  });
  return out;
}

Volume3D normalize_intensity(const Volume3D& vol, const BinaryMask& mask) {
  const MaskedStats stats = masked_stats(vol, mask);
  const double divisor = stats.mean + 3.0 * stats.std;
  if (!(divisor > 0.0))
    throw DomainError("normalize_intensity: degenerate statistics, mu + 3*sigma = " +
                      std::to_string(divisor));
  Volume3D out(vol.dims(), 0.0, vol.spacing());
  const auto& data = vol.data();
  const auto& bits = mask.bits();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (bits[i])
      out[i] = data[i] / divisor;
  return out;
}

Volume3D sobel_magnitude(const Volume3D& vol) {
  if (vol.nx() < 3 || vol.ny() < 3 || vol.nz() < 3)
    throw DomainError("sobel_magnitude: each dimension must be >= 3");
  const int nx = vol.nx(), ny = vol.ny(), nz = vol.nz();
  Volume3D out(vol.dims(), 0.0, vol.spacing());
  static const double smooth[3] = {1.0, 2.0, 1.0};
  const auto& data = vol.data();

  parallel_chunks(nz, [&](std::int64_t zb, std::int64_t ze) {
    for (std::int64_t z = zb; z < ze; ++z) {
      int zi[3] = {std::max<int>(static_cast<int>(z) - 1, 0), static_cast<int>(z),
                   std::min<int>(static_cast<int>(z) + 1, nz - 1)};
      for (int y = 0; y < ny; ++y) {
        int yi[3] = {std::max(y - 1, 0), y, std::min(y + 1, ny - 1)};
        for (int x = 0; x < nx; ++x) {
          int xi[3] = {std::max(x - 1, 0), x, std::min(x + 1, nx - 1)};
          double val[3][3][3];
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
              const std::size_t row = vol.index(0, yi[b], zi[a]);
              for (int c = 0; c < 3; ++c)
                val[c][b][a] = data[row + static_cast<std::size_t>(xi[c])];
            }
          double gx = 0.0, gy = 0.0, gz = 0.0;
          for (int b = 0; b < 3; ++b)
            for (int a = 0; a < 3; ++a) {
              gx += smooth[b] * smooth[a] * (val[2][b][a] - val[0][b][a]);
              gy += smooth[b] * smooth[a] * (val[b][2][a] - val[b][0][a]);
              gz += smooth[b] * smooth[a] * (val[b][a][2] - val[b][a][0]);
            }
          out(x, y, static_cast<int>(z)) = std::sqrt(gx * gx + gy * gy + gz * gz);
        }
      }
    }
  });
  return out;
}

int histogram_bin(double value, double lo, double hi, int bins) {
  if (!(hi > lo))
    return 0;
  const double t = (value - lo) / (hi - lo) * static_cast<double>(bins);
  int b = static_cast<int>(t);
  if (b < 0)
    b = 0;
  if (b > bins - 1)
    b = bins - 1;
  return b;
}

std::pair<Volume3D, IntensityHistogram>
build_intermediate(const Volume3D& flair_norm, const Volume3D& sobel,
                   const BinaryMask& mask, int bin_count) {
  require_same_dims(flair_norm.dims(), sobel.dims(), "build_intermediate");
  require_same_dims(flair_norm.dims(), mask.dims(), "build_intermediate");
  if (bin_count < 2)
    throw DomainError("build_intermediate: bin_count must be >= 2");

  const auto& intensity = flair_norm.data();
  const auto& gradient = sobel.data();
  const auto& bits = mask.bits();

  double ilo = 0.0, ihi = 0.0, glo = 0.0, ghi = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!bits[i])
      continue;
    if (n == 0) {
      ilo = ihi = intensity[i];
      glo = ghi = gradient[i];
    } else {
      ilo = std::min(ilo, intensity[i]);
      ihi = std::max(ihi, intensity[i]);
      glo = std::min(glo, gradient[i]);
      ghi = std::max(ghi, gradient[i]);
    }
    ++n;
  }
  if (n == 0)
    throw DomainError("build_intermediate: empty mask");
  if (!(ihi > ilo))
    throw DomainError("build_intermediate: degenerate masked intensity range");

  // Empirical CDF of gradient magnitudes, estimated on the binned values. A
  // degenerate gradient range means every voxel shares one value, whose CDF
  // is 1.
  const bool grad_flat = !(ghi > glo);
  std::vector<std::size_t> gcount(static_cast<std::size_t>(bin_count), 0);
  if (!grad_flat) {
    for (std::size_t i = 0; i < gradient.size(); ++i)
      if (bits[i])
        ++gcount[static_cast<std::size_t>(
            histogram_bin(gradient[i], glo, ghi, bin_count))];
  }
  std::vector<double> gcdf(static_cast<std::size_t>(bin_count), 1.0);
  if (!grad_flat) {
    std::size_t run = 0;
    for (int b = 0; b < bin_count; ++b) {
      run += gcount[static_cast<std::size_t>(b)];
      gcdf[static_cast<std::size_t>(b)] =
          static_cast<double>(run) / static_cast<double>(n);
    }
  }

  // h(i): mean gradient-CDF value over the voxels of intensity bin i.
  std::vector<double> hsum(static_cast<std::size_t>(bin_count), 0.0);
  std::vector<std::size_t> hcount(static_cast<std::size_t>(bin_count), 0);
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!bits[i])
      continue;
    const auto ib = static_cast<std::size_t>(
        histogram_bin(intensity[i], ilo, ihi, bin_count));
    const double cdf = grad_flat
                           ? 1.0
                           : gcdf[static_cast<std::size_t>(
                                 histogram_bin(gradient[i], glo, ghi, bin_count))];
    hsum[ib] += cdf;
    ++hcount[ib];
  }

  IntensityHistogram hist;
  hist.bin_count = bin_count;
  hist.bin_edges.resize(static_cast<std::size_t>(bin_count) + 1);
  for (int b = 0; b <= bin_count; ++b)
    hist.bin_edges[static_cast<std::size_t>(b)] =
        ilo + (ihi - ilo) * static_cast<double>(b) / static_cast<double>(bin_count);
  hist.h.assign(static_cast<std::size_t>(bin_count), 0.0);
  hist.q.assign(static_cast<std::size_t>(bin_count), 0.0);
  for (int b = 0; b < bin_count; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    hist.h[ub] = hcount[ub] > 0 ? hsum[ub] / static_cast<double>(hcount[ub]) : 0.0;
    hist.q[ub] = (b > 0 ? hist.q[ub - 1] : 0.0) + hist.h[ub];
  }
  const double total = hist.q.back();
  hist.q_rescaled.resize(static_cast<std::size_t>(bin_count));
  for (int b = 0; b < bin_count; ++b)
    hist.q_rescaled[static_cast<std::size_t>(b)] =
        hist.q[static_cast<std::size_t>(b)] / total;

  Volume3D out(flair_norm.dims(), 0.0, flair_norm.spacing());
  for (std::size_t i = 0; i < intensity.size(); ++i)
    if (bits[i])
      out[i] = hist.q_rescaled[static_cast<std::size_t>(
          histogram_bin(intensity[i], ilo, ihi, bin_count))];

  return {std::move(out), std::move(hist)};
}

} // namespace flairhi
