#include "fashioncut/dataset.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fashioncut/threadpool.hpp"

namespace fs = std::filesystem;

namespace fashioncut {

namespace {

std::string index_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

uint64_t parse_u64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 10);
}

}  // namespace

std::string DatasetManifest::image_path(size_t i) const {
  return (fs::path(root_dir) / rows[i].path).string();
}

void DatasetManifest::validate(bool check_images) const {
  std::array<int, kNumClasses> per_domain_counts[2] = {};
  for (const auto& r : rows) {
    if (r.class_id < 0 || r.class_id >= kNumClasses)
      throw DataError("manifest: class_id out of range in row for " + r.path);
    per_domain_counts[r.domain == DomainStyle::Tag::kTarget ? 1 : 0][r.class_id]++;
  }
  for (auto& counts : per_domain_counts) {
    int ref = -1;
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[c] == 0) continue;
      if (ref == -1) ref = counts[c];
      if (counts[c] != ref)
        throw DataError("manifest: per-class counts are not balanced (" +
                        std::to_string(counts[c]) + " vs " + std::to_string(ref) + ")");
    }
  }
  if (check_images) {
    for (size_t i = 0; i < rows.size(); ++i) {
      std::string p = image_path(i);
      ImageU8 img = read_png(p);  // throws if missing/corrupt
      if (img.width != image_size || img.height != image_size)
        throw DataError("manifest: image size mismatch for " + p);
    }
  }
}

DatasetManifest generate_dataset(int per_class, const DomainStyle& domain,
                                 const std::string& out_dir, uint64_t seed, int size) {
  if (per_class < 1) throw ParamError("per_class must be >= 1");
  if (size < 16) throw ParamError("image size must be >= 16");
  domain.validate();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (int c = 0; c < kNumClasses; ++c) {
    fs::path dir = fs::path(out_dir) / class_name(static_cast<PatternClass>(c));
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir.string());
  }

  DatasetManifest m;
  m.image_size = size;
  m.generator_version = kGeneratorVersion;
  m.root_dir = out_dir;
  m.rows.resize(static_cast<size_t>(per_class) * kNumClasses);

  std::atomic<bool> failed{false};
  std::string fail_path;
  std::mutex fail_mu;

  const int64_t total = static_cast<int64_t>(per_class) * kNumClasses;
  parallel_for(total, [&](int64_t i, int) {
    if (failed.load(std::memory_order_relaxed)) return;
    int class_id = static_cast<int>(i / per_class);
    int index = static_cast<int>(i % per_class);
    PatternClass cls = static_cast<PatternClass>(class_id);

    uint64_t sample_seed = hash_combine(hash_combine(seed, static_cast<uint64_t>(class_id)),
                                        static_cast<uint64_t>(index));
    RenderParams params = RenderParams::from_seed(sample_seed, cls);
    LabeledImage img = render_pattern(cls, params, size);
    if (domain.tag == DomainStyle::Tag::kTarget) {
      img = apply_domain_shift(img, domain, hash_combine(sample_seed, 0x51f7ULL));
    }

    std::string rel = std::string(class_name(cls)) + "/" + index_name(index);
    std::string full = (fs::path(out_dir) / rel).string();
    try {
      write_png(full, img.pixels);
    } catch (const std::exception&) {
      std::lock_guard<std::mutex> lk(fail_mu);
      failed = true;
      fail_path = full;
      return;
    }
    ManifestRow row;
    row.path = rel;
    row.class_id = class_id;
    row.class_name = class_name(cls);
    row.domain = domain.tag;
    row.seed = sample_seed;
    m.rows[static_cast<size_t>(i)] = std::move(row);
  });
  if (failed) throw DataError("dataset generation failed writing " + fail_path);

  save_manifest(m);
  return m;
}

void save_manifest(const DatasetManifest& m) {
  fs::path csv = fs::path(m.root_dir) / "manifest.csv";
  std::ofstream f(csv, std::ios::trunc);
  if (!f) throw DataError("cannot write manifest: " + csv.string());
  f << kManifestHeader << "\n";
  for (const auto& r : m.rows) {
    f << r.path << "," << r.class_id << "," << r.class_name << "," << domain_name(r.domain)
      << "," << r.seed << "\n";
  }
  if (!f) throw DataError("manifest write failed: " + csv.string());

  fs::path meta = fs::path(m.root_dir) / "meta.json";
  std::ofstream g(meta, std::ios::trunc);
  g << "{\"image_size\": " << m.image_size << ", \"generator_version\": \""
    << m.generator_version << "\"}\n";
}

DatasetManifest load_manifest(const std::string& manifest_csv_path) {
  std::ifstream f(manifest_csv_path);
  if (!f) throw DataError("cannot open manifest: " + manifest_csv_path);
  DatasetManifest m;
  m.root_dir = fs::path(manifest_csv_path).parent_path().string();
  if (m.root_dir.empty()) m.root_dir = ".";

  std::string line;
  if (!std::getline(f, line)) throw DataError("empty manifest: " + manifest_csv_path);
  if (line != kManifestHeader)
    throw DataError("manifest header mismatch in " + manifest_csv_path + " (expected '" +
                    kManifestHeader + "')");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) throw DataError("bad manifest row: " + line);
    ManifestRow r;
    r.path = fields[0];
    r.class_id = std::stoi(fields[1]);
    r.class_name = fields[2];
    r.domain = domain_from_name(fields[3]);
    r.seed = parse_u64(fields[4]);
    m.rows.push_back(std::move(r));
  }

  // image_size from the sidecar if present, else from the first image
  fs::path meta = fs::path(m.root_dir) / "meta.json";
  if (fs::exists(meta)) {
    std::ifstream g(meta);
    std::string all((std::istreambuf_iterator<char>(g)), std::istreambuf_iterator<char>());
    auto pos = all.find("\"image_size\"");
    if (pos != std::string::npos) {
      pos = all.find(':', pos);
      if (pos != std::string::npos) m.image_size = std::atoi(all.c_str() + pos + 1);
    }
    auto vpos = all.find("\"generator_version\"");
    if (vpos != std::string::npos) {
      auto q0 = all.find('"', all.find(':', vpos) + 1);
      auto q1 = all.find('"', q0 + 1);
      if (q0 != std::string::npos && q1 != std::string::npos)
        m.generator_version = all.substr(q0 + 1, q1 - q0 - 1);
    }
  }
  if (m.image_size == 0 && !m.rows.empty()) {
    ImageU8 first = read_png(m.image_path(0));
    m.image_size = first.width;
  }
  return m;
}

LabeledData LabeledData::load(const DatasetManifest& m) {
  if (m.rows.empty()) throw DataError("manifest has no rows: " + m.root_dir);
  LabeledData d;
  d.image_size = m.image_size;
  d.images.resize(m.rows.size());
  d.labels.resize(m.rows.size());
  parallel_for(static_cast<int64_t>(m.rows.size()), [&](int64_t i, int) {
    d.images[static_cast<size_t>(i)] = read_png(m.image_path(static_cast<size_t>(i)));
    d.labels[static_cast<size_t>(i)] = m.rows[static_cast<size_t>(i)].class_id;
  });
  for (const auto& img : d.images)
    if (img.width != d.image_size || img.height != d.image_size)
      throw DataError("image size mismatch while loading dataset at " + m.root_dir);
  return d;
}

UnlabeledData UnlabeledData::load(const DatasetManifest& m) {
  if (m.rows.empty()) throw DataError("manifest has no rows: " + m.root_dir);
  UnlabeledData d;
  d.image_size = m.image_size;
  d.images.resize(m.rows.size());
  parallel_for(static_cast<int64_t>(m.rows.size()), [&](int64_t i, int) {
    d.images[static_cast<size_t>(i)] = read_png(m.image_path(static_cast<size_t>(i)));
  });
  for (const auto& img : d.images)
    if (img.width != d.image_size || img.height != d.image_size)
      throw DataError("image size mismatch while loading dataset at " + m.root_dir);
  return d;
}

UnlabeledData UnlabeledData::load_from_csv(const std::string& manifest_csv_path) {
  // label columns are parsed structurally but never stored
  return UnlabeledData::load(load_manifest(manifest_csv_path));
}

}  // namespace fashioncut
