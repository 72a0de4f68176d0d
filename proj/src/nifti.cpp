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

#include "flairhi/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <zlib.h>

namespace flairhi {
namespace nifti {

static_assert(std::endian::native == std::endian::little,
              "NIfTI-1 codec assumes a little-endian host");

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352; // header + 4 extension bytes

// Byte offsets of the NIfTI-1 header fields we use.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;       // short dim[8]
constexpr std::size_t kOffDatatype = 70;  // short
constexpr std::size_t kOffBitpix = 72;    // short
constexpr std::size_t kOffPixdim = 76;    // float pixdim[8]
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffDescrip = 148;  // char[80]
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;  // float quatern_b,c,d
constexpr std::size_t kOffQoffset = 268;  // float qoffset_x,y,z
constexpr std::size_t kOffSrow = 280;     // float srow_x[4], srow_y[4], srow_z[4]
constexpr std::size_t kOffMagic = 344;    // char[4] "n+1\0"

template <typename T>
T read_field(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void write_field(std::vector<char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

bool is_gzip(const std::vector<char>& bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
         static_cast<unsigned char>(bytes[1]) == 0x8b;
}

std::vector<char> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string() + " for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (in.bad())
    throw IoError("read failure on " + path.string());
  return bytes;
}

std::vector<char> gunzip(const std::vector<char>& compressed,
                         const std::string& name) {
  z_stream zs{};
  // 15 + 32: accept zlib or gzip wrapping.
  if (inflateInit2(&zs, 15 + 32) != Z_OK)
    throw IoError("zlib init failure while reading " + name);
  std::vector<char> out;
  out.reserve(compressed.size() * 4);
  std::vector<char> chunk(1 << 16);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt gzip stream in " + name);
    }
    out.insert(out.end(), chunk.data(),
               chunk.data() + (chunk.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FormatError("truncated gzip stream in " + name);
    }
  }
  inflateEnd(&zs);
  return out;
}

std::size_t datatype_bytes(std::int16_t code) {
  switch (static_cast<Datatype>(code)) {
  case Datatype::Uint8: return 1;
  case Datatype::Int16: return 2;
  case Datatype::Float32: return 4;
  case Datatype::Float64: return 8;
  }
  return 0;
}

} // namespace

Volume3D read_volume(const std::filesystem::path& path, Orientation* orientation) {
  const std::string name = path.string();
  std::vector<char> bytes = read_all_bytes(path);
  if (is_gzip(bytes))
    bytes = gunzip(bytes, name);

  if (bytes.size() < kHeaderSize)
    throw FormatError(name + ": truncated header (" + std::to_string(bytes.size()) +
                      " bytes, need " + std::to_string(kHeaderSize) + ")");

  const auto sizeof_hdr = read_field<std::int32_t>(bytes, kOffSizeofHdr);
  if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
    // 1543569408 is 348 byte-swapped: a big-endian file, which we do not take.
    if (sizeof_hdr == 1543569408)
      throw FormatError(name + ": big-endian NIfTI not supported (byte 0)");
    throw FormatError(name + ": bad sizeof_hdr " + std::to_string(sizeof_hdr) +
                      " at byte 0");
  }

  char magic[4];
  std::memcpy(magic, bytes.data() + kOffMagic, 4);
  if (std::memcmp(magic, "n+1\0", 4) != 0)
    throw FormatError(name + ": bad magic at byte " + std::to_string(kOffMagic) +
                      " (expected \"n+1\")");

  std::int16_t dim[8];
  std::memcpy(dim, bytes.data() + kOffDim, sizeof(dim));
  if (dim[0] < 1 || dim[0] > 7)
    throw FormatError(name + ": dim[0]=" + std::to_string(dim[0]) +
                      " out of range at byte " + std::to_string(kOffDim));
  for (int d = 4; d <= dim[0]; ++d)
    if (dim[d] > 1)
      throw FormatError(name + ": multi-frame image (dim[" + std::to_string(d) +
                        "]=" + std::to_string(dim[d]) + ") not supported");
  const int nx = dim[0] >= 1 ? std::max<int>(dim[1], 1) : 1;
  const int ny = dim[0] >= 2 ? std::max<int>(dim[2], 1) : 1;
  const int nz = dim[0] >= 3 ? std::max<int>(dim[3], 1) : 1;

  const auto datatype = read_field<std::int16_t>(bytes, kOffDatatype);
  const std::size_t value_bytes = datatype_bytes(datatype);
  if (value_bytes == 0)
    throw FormatError(name + ": unsupported datatype code " +
                      std::to_string(datatype) + " at byte " +
                      std::to_string(kOffDatatype));

  float pixdim[8];
  std::memcpy(pixdim, bytes.data() + kOffPixdim, sizeof(pixdim));
  Spacing3 spacing = {pixdim[1] > 0 ? pixdim[1] : 1.0,
                      pixdim[2] > 0 ? pixdim[2] : 1.0,
                      pixdim[3] > 0 ? pixdim[3] : 1.0};

  const float vox_offset_f = read_field<float>(bytes, kOffVoxOffset);
  const auto data_offset = static_cast<std::size_t>(vox_offset_f);
  if (vox_offset_f < static_cast<float>(kHeaderSize))
    throw FormatError(name + ": vox_offset " + std::to_string(vox_offset_f) +
                      " at byte " + std::to_string(kOffVoxOffset) +
                      " points inside the header");

  const float scl_slope = read_field<float>(bytes, kOffSclSlope);
  const float scl_inter = read_field<float>(bytes, kOffSclInter);

  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  const std::size_t need = data_offset + n * value_bytes;
  if (bytes.size() < need)
    throw FormatError(name + ": truncated payload at byte " +
                      std::to_string(bytes.size()) + " (need " +
                      std::to_string(need) + " for " + std::to_string(n) +
                      " voxels)");

  std::vector<double> values(n);
  const char* payload = bytes.data() + data_offset;
  switch (static_cast<Datatype>(datatype)) {
  case Datatype::Uint8:
    for (std::size_t i = 0; i < n; ++i)
      values[i] = static_cast<double>(static_cast<unsigned char>(payload[i]));
    break;
  case Datatype::Int16:
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, payload + i * 2, 2);
      values[i] = static_cast<double>(v);
    }
    break;
  case Datatype::Float32:
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, payload + i * 4, 4);
      values[i] = static_cast<double>(v);
    }
    break;
  case Datatype::Float64:
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      std::memcpy(&v, payload + i * 8, 8);
      values[i] = v;
    }
    break;
  }

  const bool apply_scale = scl_slope != 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    if (apply_scale)
      values[i] = static_cast<double>(scl_slope) * values[i] +
                  static_cast<double>(scl_inter);
    if (!std::isfinite(values[i]))
      throw FormatError(name + ": non-finite value at voxel " + std::to_string(i) +
                        " (byte " + std::to_string(data_offset + i * value_bytes) +
                        ")");
  }

  if (orientation) {
    Orientation o;
    o.qform_code = read_field<std::int16_t>(bytes, kOffQformCode);
    o.sform_code = read_field<std::int16_t>(bytes, kOffSformCode);
    std::memcpy(o.quatern, bytes.data() + kOffQuatern, sizeof(o.quatern));
    std::memcpy(o.qoffset, bytes.data() + kOffQoffset, sizeof(o.qoffset));
    std::memcpy(o.srow, bytes.data() + kOffSrow, sizeof(o.srow));
    o.qfac = pixdim[0];
    *orientation = o;
  }

  return Volume3D::from_data({nx, ny, nz}, std::move(values), spacing);
}

BinaryMask read_mask(const std::filesystem::path& path, Orientation* orientation) {
  Volume3D vol = read_volume(path, orientation);
  BinaryMask mask(vol.dims());
  for (std::size_t i = 0; i < vol.size(); ++i)
    mask.set_flat(i, vol[i] >= 0.5);
  return mask;
}

namespace {

std::vector<char> build_header(const Dims3& dims, Spacing3 spacing,
                               Datatype datatype, const Orientation* orientation) {
  std::vector<char> hdr(kHeaderSize, 0);
  write_field<std::int32_t>(hdr, kOffSizeofHdr, kHeaderSize);

  std::int16_t dim[8] = {3,
                         static_cast<std::int16_t>(dims[0]),
                         static_cast<std::int16_t>(dims[1]),
                         static_cast<std::int16_t>(dims[2]),
                         1, 1, 1, 1};
  std::memcpy(hdr.data() + kOffDim, dim, sizeof(dim));

  write_field<std::int16_t>(hdr, kOffDatatype, static_cast<std::int16_t>(datatype));
  write_field<std::int16_t>(hdr, kOffBitpix,
                            static_cast<std::int16_t>(
                                datatype_bytes(static_cast<std::int16_t>(datatype)) * 8));

  float pixdim[8] = {orientation ? orientation->qfac : 1.f,
                     static_cast<float>(spacing[0]),
                     static_cast<float>(spacing[1]),
                     static_cast<float>(spacing[2]),
                     0.f, 0.f, 0.f, 0.f};
  std::memcpy(hdr.data() + kOffPixdim, pixdim, sizeof(pixdim));

  write_field<float>(hdr, kOffVoxOffset, static_cast<float>(kVoxOffset));
  write_field<float>(hdr, kOffSclSlope, 1.0f);
  write_field<float>(hdr, kOffSclInter, 0.0f);

  const char descrip[] = "flairhi";
  std::memcpy(hdr.data() + kOffDescrip, descrip, sizeof(descrip));

  if (orientation) {
    write_field<std::int16_t>(hdr, kOffQformCode, orientation->qform_code);
    write_field<std::int16_t>(hdr, kOffSformCode, orientation->sform_code);
    std::memcpy(hdr.data() + kOffQuatern, orientation->quatern,
                sizeof(orientation->quatern));
    std::memcpy(hdr.data() + kOffQoffset, orientation->qoffset,
                sizeof(orientation->qoffset));
    std::memcpy(hdr.data() + kOffSrow, orientation->srow, sizeof(orientation->srow));
  }

  std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);
  return hdr;
}

void write_file(const std::filesystem::path& path, const std::vector<char>& header,
                const std::vector<char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const char pad[4] = {0, 0, 0, 0}; // empty extension field up to vox_offset
  out.write(pad, 4);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out)
    throw IoError("write failure on " + path.string());
}

} // namespace

void write_volume(const Volume3D& vol, const std::filesystem::path& path,
                  Datatype datatype, const Orientation* orientation) {
  if (datatype == Datatype::Int16)
    throw DomainError("write_volume: int16 output not supported");
  std::vector<char> header = build_header(vol.dims(), vol.spacing(), datatype,
                                          orientation);
  const std::size_t n = vol.size();
  std::vector<char> payload;
  switch (datatype) {
  case Datatype::Uint8: {
    payload.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      payload[i] = static_cast<char>(static_cast<unsigned char>(vol[i]));
    break;
  }
  case Datatype::Float32: {
    payload.resize(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      const float v = static_cast<float>(vol[i]);
      std::memcpy(payload.data() + i * 4, &v, 4);
    }
    break;
  }
  case Datatype::Float64: {
    payload.resize(n * 8);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = vol[i];
      std::memcpy(payload.data() + i * 8, &v, 8);
    }
    break;
  }
  default:
    throw DomainError("write_volume: unsupported datatype");
  }
  write_file(path, header, payload);
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path,
                const Orientation* orientation, Spacing3 spacing) {
  std::vector<char> header = build_header(mask.dims(), spacing, Datatype::Uint8,
                                          orientation);
  std::vector<char> payload(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    payload[i] = mask[i] ? 1 : 0;
  write_file(path, header, payload);
}

} // namespace nifti
} // namespace flairhi
