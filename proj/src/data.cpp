#include "sslus/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sslus/errors.hpp"
#include "sslus/rng.hpp"

namespace fs = std::filesystem;

namespace sslus {

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

std::array<std::size_t, 3> DatasetManifest::split_counts() const {
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const auto& e : entries) ++counts[static_cast<std::size_t>(e.split)];
  return counts;
}

std::vector<ManifestEntry> DatasetManifest::entries_in(Split s) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [s](const ManifestEntry& e) { return e.split == s; });
  return out;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());

  DatasetManifest manifest;
  manifest.name = path.stem().string();
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  std::string line;
  int line_no = 0;
  std::set<fs::path> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"image_path", "mask_path", "split"}) {
        throw ParseError(path.string() + ":1: expected header image_path,mask_path,split");
      }
      continue;
    }
    if (fields.size() != 3 || fields[0].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 3 fields (image_path,mask_path,split)");
    }
    ManifestEntry entry;
    try {
      entry.split = parse_split(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    entry.image_path = resolve(base, fields[0]);
    if (!fs::exists(entry.image_path)) {
      throw IoError("image not found: " + entry.image_path.string() + " (line " +
                    std::to_string(line_no) + ")");
    }
    if (!fields[1].empty()) {
      entry.mask_path = resolve(base, fields[1]);
      if (!fs::exists(*entry.mask_path)) {
        throw IoError("mask not found: " + entry.mask_path->string() + " (line " +
                      std::to_string(line_no) + ")");
      }
    }
    if (!seen.insert(entry.image_path.lexically_normal()).second) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate image path " +
                       fields[0]);
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (line_no == 0) throw ParseError(path.string() + ":1: empty manifest");
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto rel = [&](const fs::path& p) {
    auto r = p.lexically_relative(base);
    return r.empty() ? p.string() : r.string();
  };
  out << "image_path,mask_path,split\n";
  for (const auto& e : manifest.entries) {
    out << rel(e.image_path) << ',' << (e.mask_path ? rel(*e.mask_path) : std::string{}) << ','
        << to_string(e.split) << '\n';
  }
}

std::size_t subset_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("subset fraction must lie in (0,1]");
  }
  // The epsilon absorbs products like 0.29*100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

DatasetManifest take_train_subset(const DatasetManifest& manifest, const SubsetSpec& spec) {
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == Split::Train) train_idx.push_back(i);
  }
  const std::size_t keep = subset_size(train_idx.size(), spec.fraction);

  Rng rng(mix_seed(spec.seed, 0x5b5e7ULL));
  std::shuffle(train_idx.begin(), train_idx.end(), rng.engine());
  std::vector<bool> chosen(manifest.entries.size(), false);
  for (std::size_t i = 0; i < keep; ++i) chosen[train_idx[i]] = true;

  DatasetManifest out;
  out.name = manifest.name;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.split != Split::Train || chosen[i]) out.entries.push_back(e);
  }
  return out;
}

Image resize_image(const Image& img, int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("resize target must be positive");
  if (height == img.height && width == img.width) return img;

  Image out(height, width, 0.0f, img.id);
  const double sy = static_cast<double>(img.height) / height;
  const double sx = static_cast<double>(img.width) / width;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
      int i0 = static_cast<int>(std::floor(src));
      int i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, src - i0};
    }
    return t;
  };
  const auto ty = taps(height, img.height, sy);
  const auto tx = taps(width, img.width, sx);

  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto& a = ty[y];
        const auto& b = tx[x];
        double top = img.at(c, a.i0, b.i0) * (1.0 - b.w1) + img.at(c, a.i0, b.i1) * b.w1;
        double bot = img.at(c, a.i1, b.i0) * (1.0 - b.w1) + img.at(c, a.i1, b.i1) * b.w1;
        double v = top * (1.0 - a.w1) + bot * a.w1;
        out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Mask resize_mask(const Mask& mask, int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("resize target must be positive");
  if (height == mask.height && width == mask.width) return mask;
  Mask out(height, width, 0, mask.id);
  for (int y = 0; y < height; ++y) {
    int sy = std::min(mask.height - 1, static_cast<int>((y + 0.5) * mask.height / height));
    for (int x = 0; x < width; ++x) {
      int sx = std::min(mask.width - 1, static_cast<int>((x + 0.5) * mask.width / width));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Image load_image(const fs::path& path, std::string id) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot read image " + path.string());
  if (raw.depth() != CV_8U) throw DataError("expected 8-bit image: " + path.string());
  cv::Mat rgb;
  switch (raw.channels()) {
    case 1: cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw DataError("unsupported channel count in " + path.string());
  }
  if (id.empty()) id = path.stem().string();
  Image out(rgb.rows, rgb.cols, 0.0f, std::move(id));
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = row[x][c] / 255.0f;
    }
  }
  return out;
}

Mask load_mask(const fs::path& path, std::string id) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw IoError("cannot read mask " + path.string());
  if (id.empty()) id = path.stem().string();
  Mask out(raw.rows, raw.cols, 0, std::move(id));
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint8_t>(y);
    for (int x = 0; x < raw.cols; ++x) out.at(y, x) = row[x] > 127 ? 1 : 0;
  }
  return out;
}

namespace {
std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_png(const fs::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw IoError("cannot write " + path.string());
}
}  // namespace

void save_image_png(const fs::path& path, const Image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) row[x][2 - c] = to_byte(img.at(c, y, x));
    }
  }
  write_png(path, bgr);
}

void save_mask_png(const fs::path& path, const Mask& mask) {
  cv::Mat m(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) m.at<std::uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  }
  write_png(path, m);
}

void save_plane_png(const fs::path& path, const std::vector<float>& plane, int h, int w) {
  cv::Mat m(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.at<std::uint8_t>(y, x) = to_byte(plane[y * w + x]);
  }
  write_png(path, m);
}

namespace {

constexpr double kBackground = 0.1;
constexpr double kLesionMean = 0.45;
constexpr double kSpeckle = 0.3;
constexpr double kBlurSigma = 1.0;
constexpr double kMaxForeground = 0.4;

bool single_component(const Mask& m) {
  std::size_t total = m.foreground();
  if (total == 0) return false;
  std::vector<std::uint8_t> seen(m.pixels.size(), 0);
  std::queue<std::pair<int, int>> q;
  for (int y = 0; y < m.height && q.empty(); ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(y, x)) {
        q.push({y, x});
        seen[y * m.width + x] = 1;
        break;
      }
    }
  }
  std::size_t reached = 0;
  const int dy[] = {1, -1, 0, 0};
  const int dx[] = {0, 0, 1, -1};
  while (!q.empty()) {
    auto [y, x] = q.front();
    q.pop();
    ++reached;
    for (int k = 0; k < 4; ++k) {
      int ny = y + dy[k], nx = x + dx[k];
      if (ny < 0 || nx < 0 || ny >= m.height || nx >= m.width) continue;
      auto idx = static_cast<std::size_t>(ny) * m.width + nx;
      if (m.pixels[idx] && !seen[idx]) {
        seen[idx] = 1;
        q.push({ny, nx});
      }
    }
  }
  return reached == total;
}

SyntheticSample make_sample(int index, int h, int w, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0x5e7ULL, static_cast<std::uint64_t>(index));
  const double side = std::min(h, w);
  std::string id = "synth_" + std::to_string(index);

  Mask mask(h, w, 0, id);
  for (;;) {
    const double ra = rng.uniform(0.10, 0.25) * side;
    const double rb = rng.uniform(0.08, 0.20) * side;
    const double theta = rng.uniform(0.0, M_PI);
    const double cy = std::round(rng.uniform(0.3, 0.7) * (h - 1));
    const double cx = std::round(rng.uniform(0.3, 0.7) * (w - 1));
    const double ct = std::cos(theta), st = std::sin(theta);
    std::fill(mask.pixels.begin(), mask.pixels.end(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double dy = y - cy, dx = x - cx;
        double u = (dx * ct + dy * st) / ra;
        double v = (-dx * st + dy * ct) / rb;
        if (u * u + v * v <= 1.0) mask.at(y, x) = 1;
      }
    }
    const double area = static_cast<double>(mask.foreground()) / (static_cast<double>(h) * w);
    if (area > 0.0 && area <= kMaxForeground && single_component(mask)) break;
  }

  const double bg = kBackground + rng.uniform(-0.02, 0.02);
  const double lesion = kLesionMean + rng.uniform(-0.05, 0.05);
  cv::Mat plane(h, w, CV_64FC1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double base = mask.at(y, x) ? lesion : bg;
      double v = base * (1.0 + kSpeckle * rng.normal());
      plane.at<double>(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  cv::Mat blurred;
  cv::GaussianBlur(plane, blurred, cv::Size(0, 0), kBlurSigma, kBlurSigma, cv::BORDER_REFLECT);

  std::vector<float> gray(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gray[y * w + x] = static_cast<float>(std::clamp(blurred.at<double>(y, x), 0.0, 1.0));
    }
  }
  return {from_gray(gray, h, w, id), std::move(mask)};
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic_dataset(int n, int height, int width,
                                                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthetic dataset needs n >= 1");
  if (height < 32 || width < 32) throw std::invalid_argument("synthetic images need side >= 32");
  std::vector<SyntheticSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(make_sample(i, height, width, seed));
  return out;
}

DatasetManifest write_synthetic_dataset(const fs::path& dir,
                                        const std::vector<SyntheticSample>& samples,
                                        double train_fraction, double val_fraction) {
  if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to <= 1");
  }
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  const std::size_t n = samples.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * n + 1e-9));

  DatasetManifest manifest;
  manifest.name = dir.filename().string();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    ManifestEntry e;
    e.image_path = dir / "images" / (s.image.id + ".png");
    e.mask_path = dir / "masks" / (s.image.id + ".png");
    e.split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    save_image_png(e.image_path, s.image);
    save_mask_png(*e.mask_path, s.mask);
    manifest.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.csv", manifest);
  return manifest;
}

std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries, int size,
                                 bool require_masks) {
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (require_masks && !e.mask_path) {
      throw DataError("entry " + e.image_path.string() + " has no mask");
    }
    Sample s;
    s.image = load_image(e.image_path);
    if (size > 0) s.image = resize_image(s.image, size, size);
    if (e.mask_path) {
      Mask m = load_mask(*e.mask_path, s.image.id);
      s.mask = size > 0 ? resize_mask(m, size, size) : m;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sslus
