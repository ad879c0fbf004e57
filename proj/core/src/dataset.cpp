#include "idon/dataset.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "idon/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "IDON1 containers store little-endian float64 payloads");

namespace idon::prob {

namespace {

constexpr char kMagic[] = "IDON1\n";

struct ArrayRef {
  const char* name;
  const Mat* mat;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<ArrayRef> manifest(const OperatorDataset& ds) {
  return {
      {"sensors", &ds.sensors},
      {"obs_coords", &ds.obs_coords},
      {"inputs_unlabeled", &ds.inputs_unlabeled},
      {"inputs_labeled", &ds.inputs_labeled},
      {"outputs_labeled", &ds.outputs_labeled},
      {"fine_unlabeled", &ds.fine_unlabeled},
      {"fine_labeled", &ds.fine_labeled},
  };
}

}  // namespace

void save_dataset(const OperatorDataset& ds, const std::string& path) {
  std::ostringstream meta;
  meta << "problem=" << problem_name(ds.problem) << "\n";
  meta << "seed=" << ds.meta.seed << "\n";
  meta << "gp_lengthscale=" << fmt_double(ds.meta.gp_lengthscale) << "\n";
  meta << "fine_grid=" << ds.meta.fine_grid << "\n";
  meta << "gp_grid=" << ds.meta.gp_grid << "\n";
  meta << "rd_nx=" << ds.meta.rd_nx << "\n";
  meta << "rd_nt=" << ds.meta.rd_nt << "\n";
  if (!ds.meta.config_hash.empty()) meta << "config_hash=" << ds.meta.config_hash << "\n";
  for (const ArrayRef& a : manifest(ds))
    meta << "array=" << a.name << " " << a.mat->rows << " " << a.mat->cols << "\n";
  const std::string meta_str = meta.str();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(kMagic, 6);
  const std::string len = std::to_string(meta_str.size()) + "\n";
  out.write(len.data(), static_cast<std::streamsize>(len.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  for (const ArrayRef& a : manifest(ds))
    out.write(reinterpret_cast<const char*>(a.mat->a.data()),
              static_cast<std::streamsize>(a.mat->a.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

OperatorDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  in.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0)
    throw IoError("not an IDON1 container: " + path);

  std::string len_line;
  if (!std::getline(in, len_line)) throw IoError("truncated header: " + path);
  std::uint64_t meta_len = 0;
  if (std::sscanf(len_line.c_str(), "%" SCNu64, &meta_len) != 1)
    throw IoError("bad metadata length: " + path);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw IoError("truncated metadata: " + path);

  OperatorDataset ds;
  struct Shape {
    std::string name;
    int rows = 0, cols = 0;
  };
  std::vector<Shape> shapes;
  std::istringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed metadata line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "problem") {
      ds.problem = problem_from_name(val);
    } else if (key == "seed") {
      ds.meta.seed = std::stoull(val);
    } else if (key == "gp_lengthscale") {
      ds.meta.gp_lengthscale = std::stod(val);
    } else if (key == "fine_grid") {
      ds.meta.fine_grid = std::stoi(val);
    } else if (key == "gp_grid") {
      ds.meta.gp_grid = std::stoi(val);
    } else if (key == "rd_nx") {
      ds.meta.rd_nx = std::stoi(val);
    } else if (key == "rd_nt") {
      ds.meta.rd_nt = std::stoi(val);
    } else if (key == "config_hash") {
      ds.meta.config_hash = val;
    } else if (key == "array") {
      Shape s;
      std::istringstream as(val);
      if (!(as >> s.name >> s.rows >> s.cols) || s.rows < 0 || s.cols < 0)
        throw IoError("malformed array entry: " + line);
      shapes.push_back(s);
    } else {
      throw IoError("unknown metadata key: " + key);
    }
  }

  std::uint64_t payload = 0;
  for (const Shape& s : shapes)
    payload += static_cast<std::uint64_t>(s.rows) * s.cols * sizeof(double);
  const std::uint64_t expected =
      6 + std::to_string(meta_len).size() + 1 + meta_len + payload;
  if (expected != file_size)
    throw IoError("byte count mismatch in " + path + ": expected " + std::to_string(expected) +
                  ", file has " + std::to_string(file_size));

  auto read_mat = [&in, &path](int rows, int cols) {
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    if (!in) throw IoError("truncated array payload: " + path);
    return m;
  };
  for (const Shape& s : shapes) {
    if (s.name == "sensors")
      ds.sensors = read_mat(s.rows, s.cols);
    else if (s.name == "obs_coords")
      ds.obs_coords = read_mat(s.rows, s.cols);
    else if (s.name == "inputs_unlabeled")
      ds.inputs_unlabeled = read_mat(s.rows, s.cols);
    else if (s.name == "inputs_labeled")
      ds.inputs_labeled = read_mat(s.rows, s.cols);
    else if (s.name == "outputs_labeled")
      ds.outputs_labeled = read_mat(s.rows, s.cols);
    else if (s.name == "fine_unlabeled")
      ds.fine_unlabeled = read_mat(s.rows, s.cols);
    else if (s.name == "fine_labeled")
      ds.fine_labeled = read_mat(s.rows, s.cols);
    else
      throw IoError("unknown array name: " + s.name);
  }
  return ds;
}

}  // namespace idon::prob
