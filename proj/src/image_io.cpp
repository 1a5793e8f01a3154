#include "nsl/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace nsl {

namespace {

void skip_space_and_comments(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& in, const char* what) {
  skip_space_and_comments(in);
  long v = -1;
  if (!(in >> v) || v <= 0) {
    throw std::runtime_error(std::string("pgm: malformed header (") + what + ")");
  }
  return v;
}

}  // namespace

Image read_image_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw std::runtime_error("pgm: malformed header (expected P5)");
  }
  const long cols = read_header_int(in, "width");
  const long rows = read_header_int(in, "height");
  const long maxval = read_header_int(in, "maxval");
  if (maxval > 65535) throw std::runtime_error("pgm: unsupported maxval " + std::to_string(maxval));
  const int c = in.get();
  if (c == EOF || !std::isspace(c)) throw std::runtime_error("pgm: malformed header");

  const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error("pgm: truncated pixel data");
  }
  Image img(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  auto& v = img.values();
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned s = bytes == 2 ? (raw[2 * i] << 8u) | raw[2 * i + 1] : raw[i];
    if (s > static_cast<unsigned>(maxval)) throw std::runtime_error("pgm: sample exceeds maxval");
    v[i] = s * scale;
  }
  return img;
}

void write_image_pgm(const std::filesystem::path& path, const Image& img, std::uint16_t maxval) {
  if (maxval == 0) throw std::invalid_argument("pgm: maxval must be >= 1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::vector<unsigned char> raw;
  raw.reserve(img.size() * (wide ? 2 : 1));
  for (double v : img.values()) {
    const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(c * maxval));
    if (wide) raw.push_back(static_cast<unsigned char>(q >> 8u));
    raw.push_back(static_cast<unsigned char>(q & 0xffu));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + path.string());
}

void write_image_csv(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      if (j) out << ',';
      out << img(i, j);
    }
    out << '\n';
  }
}

Image make_synthetic_data(DataKind kind, const Image& truth, double sigma, const Image& kernel,
                          std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("make_synthetic_data: sigma must be >= 0");
  Image y = kind == DataKind::deconv ? convolve2d_periodic(truth, kernel) : truth;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  for (double& v : y.values()) v += sigma * nd(gen);
  return y;
}

Image phantom(std::size_t n) {
  if (n < 8) throw std::invalid_argument("phantom: size must be >= 8");
  const double h = static_cast<double>(n);
  Image img(n, n, 0.2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = i + 0.5 - 0.5 * h, b = j + 0.5 - 0.5 * h;
      if (a * a + b * b < 0.35 * 0.35 * h * h) img(i, j) = 0.8;
      const double c = i + 0.5 - 0.42 * h, d = j + 0.5 - 0.6 * h;
      if (c * c + d * d < 0.12 * 0.12 * h * h) img(i, j) = 0.5;
    }
  }
  return img;
}

EdgeMasks edge_masks(const Image& img, std::size_t margin) {
  const std::size_t n = img.rows(), m = img.cols();
  std::vector<char> is_edge(n * m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = img(i, j);
      const bool e = (i > 0 && img(i - 1, j) != v) || (i + 1 < n && img(i + 1, j) != v) ||
                     (j > 0 && img(i, j - 1) != v) || (j + 1 < m && img(i, j + 1) != v);
      is_edge[i * m + j] = e;
    }
  }
  EdgeMasks out;
  const long r = static_cast<long>(margin);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (is_edge[i * m + j]) {
        out.edge.push_back(i * m + j);
        continue;
      }
      bool near = false;
      for (long a = -r + 1; a < r && !near; ++a) {
        for (long b = -r + 1; b < r && !near; ++b) {
          const long ii = static_cast<long>(i) + a, jj = static_cast<long>(j) + b;
          if (ii < 0 || jj < 0 || ii >= static_cast<long>(n) || jj >= static_cast<long>(m)) continue;
          near = is_edge[ii * m + jj];
        }
      }
      if (!near) out.flat.push_back(i * m + j);
    }
  }
  return out;
}

}  // namespace nsl
