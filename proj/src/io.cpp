#include "pulsar/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace pulsar {

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw io_error(path + ": cannot open for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), std::streamsize(n));
    if (!out_) throw io_error(path_ + ": write failed");
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw io_error(path + ": cannot open");
    in_.seekg(0, std::ios::end);
    size_ = std::uint64_t(in_.tellg());
    in_.seekg(0);
  }
  void bytes(void* p, std::size_t n, const char* field) {
    if (offset_ + n > size_)
      throw io_error(path_ + ": truncated while reading " + field + " at byte offset " +
                     std::to_string(offset_) + " (file is " + std::to_string(size_) +
                     " bytes)");
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (!in_) throw io_error(path_ + ": read failed at byte offset " + std::to_string(offset_));
    offset_ += n;
  }
  std::uint32_t u32(const char* field) {
    std::uint32_t v;
    bytes(&v, 4, field);
    return v;
  }
  float f32(const char* field) {
    float v;
    bytes(&v, 4, field);
    return v;
  }
  void expect_magic(const char* magic) {
    char m[4];
    bytes(m, 4, "magic");
    if (std::memcmp(m, magic, 4) != 0)
      throw io_error(path_ + ": bad magic, expected \"" + magic + "\"");
  }
  void expect_version() {
    std::uint32_t v = u32("version");
    if (v != kFileVersion)
      throw io_error(path_ + ": unsupported version " + std::to_string(v));
  }
  void expect_end() {
    if (offset_ != size_)
      throw io_error(path_ + ": " + std::to_string(size_ - offset_) +
                     " trailing bytes after byte offset " + std::to_string(offset_));
  }
  std::uint64_t remaining() const { return size_ - offset_; }
  std::uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t offset_ = 0;
};

std::uint32_t checked_dim(Reader& r, const char* field) {
  std::uint32_t v = r.u32(field);
  if (v == 0 || v > (1u << 24))
    throw io_error(r.path() + ": implausible " + std::string(field) + " " + std::to_string(v));
  return v;
}

void write_header(Writer& w, const char* magic, int h, int wdt, int d,
                  const ScanTimingMatrix& tm, float bin_ns) {
  if (tm.channels != h || tm.azimuth_bins != wdt)
    throw std::invalid_argument("timing matrix does not match the grid being written");
  w.bytes(magic, 4);
  w.u32(kFileVersion);
  w.u32(std::uint32_t(h));
  w.u32(std::uint32_t(wdt));
  w.u32(std::uint32_t(d));
  w.u32(std::uint32_t(tm.group_size));
  w.f32(bin_ns);
  w.bytes(tm.stamps.data(), tm.stamps.size() * 4);
}

ScanTimingMatrix read_header(Reader& r, const char* magic, std::uint32_t& h,
                             std::uint32_t& w, std::uint32_t& d, float& bin_ns) {
  r.expect_magic(magic);
  r.expect_version();
  h = checked_dim(r, "channels");
  w = checked_dim(r, "azimuth_bins");
  d = checked_dim(r, "time_bins");
  std::uint32_t phi = checked_dim(r, "group_size");
  bin_ns = r.f32("bin_duration_ns");
  if (!(bin_ns > 0)) throw io_error(r.path() + ": bin_duration_ns must be > 0");

  ScanTimingMatrix tm;
  tm.channels = int(h);
  tm.azimuth_bins = int(w);
  tm.group_size = int(phi);
  tm.stamps.resize(std::size_t(h) * w);
  r.bytes(tm.stamps.data(), tm.stamps.size() * 4, "timing matrix");
  std::uint32_t max_stamp = 0;
  for (std::uint32_t s : tm.stamps) max_stamp = std::max(max_stamp, s);
  tm.timestamp_count = max_stamp + 1;
  return tm;
}

ScanTimingMatrix trivial_timing(int h, int w) {
  ScanTimingMatrix tm;
  tm.channels = h;
  tm.azimuth_bins = w;
  tm.group_size = 1;
  tm.timestamp_count = std::uint32_t(std::size_t(h) * w);
  tm.stamps.resize(std::size_t(h) * w);
  for (std::size_t f = 0; f < tm.stamps.size(); ++f)
    tm.stamps[f] = std::uint32_t(f);
  return tm;
}

}  // namespace

void write_waveform(const std::string& path, const WaveformTensor& w,
                    const ScanTimingMatrix& tm) {
  const SensorConfig& sc = w.sensor();
  Writer out(path);
  write_header(out, "PWFM", sc.channels, sc.azimuth_bins, sc.time_bins, tm,
               sc.bin_duration_ns);
  out.bytes(w.data().data(), w.data().size() * 4);
}

WaveformFile read_waveform(const std::string& path) {
  Reader in(path);
  std::uint32_t h, w, d;
  float bin_ns;
  WaveformFile file;
  file.timing = read_header(in, "PWFM", h, w, d, bin_ns);

  SensorConfig sc;
  sc.channels = int(h);
  sc.azimuth_bins = int(w);
  sc.time_bins = int(d);
  sc.bin_duration_ns = bin_ns;
  file.tensor = WaveformTensor(sc);
  in.bytes(file.tensor.data().data(), file.tensor.data().size() * 4, "waveform payload");
  in.expect_end();
  return file;
}

void write_mask(const std::string& path, const SegMask& m,
                const ScanTimingMatrix* tm, float bin_ns) {
  ScanTimingMatrix trivial;
  if (!tm) {
    trivial = trivial_timing(m.channels(), m.azimuth_bins());
    tm = &trivial;
  }
  Writer out(path);
  write_header(out, "PMSK", m.channels(), m.azimuth_bins(), m.time_bins(), *tm, bin_ns);
  out.bytes(m.data().data(), m.data().size());
}

MaskFile read_mask(const std::string& path) {
  Reader in(path);
  std::uint32_t h, w, d;
  float bin_ns;
  MaskFile file;
  file.timing = read_header(in, "PMSK", h, w, d, bin_ns);
  file.mask = SegMask(int(h), int(w), int(d));
  in.bytes(file.mask.data().data(), file.mask.data().size(), "mask payload");
  for (std::uint8_t v : file.mask.data())
    if (v >= SegMask::kClassCount)
      throw io_error(path + ": label value " + std::to_string(v) + " out of range");
  in.expect_end();
  return file;
}

void write_weights(const std::string& path, const nn::WeightBundle& wb) {
  Writer out(path);
  out.bytes("PWTS", 4);
  out.u32(kFileVersion);
  out.u32(std::uint32_t(wb.layers.size()));
  for (const nn::Layer& l : wb.layers) {
    if (l.values.size() != l.element_count())
      throw std::invalid_argument("write_weights: layer '" + l.name +
                                  "' value count does not match its shape");
    out.u32(std::uint32_t(l.name.size()));
    out.bytes(l.name.data(), l.name.size());
    out.u32(std::uint32_t(l.shape.size()));
    for (int s : l.shape) out.u32(std::uint32_t(s));
  }
  for (const nn::Layer& l : wb.layers)
    out.bytes(l.values.data(), l.values.size() * 4);
}

nn::WeightBundle read_weights(const std::string& path) {
  Reader in(path);
  in.expect_magic("PWTS");
  in.expect_version();
  std::uint32_t count = in.u32("layer count");
  if (count > 4096) throw io_error(path + ": implausible layer count");

  nn::WeightBundle wb;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = in.u32("layer name length");
    if (name_len == 0 || name_len > 256)
      throw io_error(path + ": implausible layer name length");
    std::string name(name_len, '\0');
    in.bytes(name.data(), name_len, "layer name");
    std::uint32_t ndim = in.u32("layer rank");
    if (ndim == 0 || ndim > 8) throw io_error(path + ": implausible layer rank");
    std::vector<int> shape(ndim);
    for (std::uint32_t a = 0; a < ndim; ++a) {
      std::uint32_t s = checked_dim(in, "layer dim");
      shape[a] = int(s);
    }
    wb.add(name, std::move(shape));
  }
  for (nn::Layer& l : wb.layers)
    in.bytes(l.values.data(), l.values.size() * 4,
             ("values of layer '" + l.name + "'").c_str());
  in.expect_end();
  return wb;
}

std::vector<Point3D> load_pointcloud_bin(const std::string& path) {
  Reader in(path);
  std::uint64_t bytes = in.remaining();
  if (bytes % 16 != 0)
    throw io_error(path + ": size " + std::to_string(bytes) +
                   " is not a multiple of 16; record truncated at byte offset " +
                   std::to_string(bytes - bytes % 16));
  std::vector<Point3D> pts(bytes / 16);
  static_assert(sizeof(Point3D) == 16);
  if (!pts.empty()) in.bytes(pts.data(), bytes, "point records");
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const Point3D& q = pts[p];
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z) ||
        !std::isfinite(q.intensity))
      throw io_error(path + ": non-finite value in record " + std::to_string(p) +
                     " at byte offset " + std::to_string(p * 16));
  }
  return pts;
}

void write_pointcloud_bin(const std::string& path,
                          const std::vector<Point3D>& points) {
  Writer out(path);
  if (!points.empty()) out.bytes(points.data(), points.size() * 16);
}

}  // namespace pulsar
