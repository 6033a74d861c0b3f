#include "autocalib/image.hpp"

#include <cmath>
#include <fstream>

#include "autocalib/errors.hpp"

namespace autocalib {

Image Image::create(int w, int h, int ch, uint8_t fill) {
  Image img;
  img.width = w;
  img.height = h;
  img.channels = ch;
  img.data.assign(static_cast<size_t>(w) * h * ch, fill);
  return img;
}

bool Image::sample(double x, double y, double* out) const {
  if (x < 0 || y < 0 || x > width - 1 || y > height - 1) return false;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < channels; ++c) {
    const double top = (1 - fx) * at(x0, y0, c) + fx * at(x1, y0, c);
    const double bot = (1 - fx) * at(x0, y1, c) + fx * at(x1, y1, c);
    out[c] = (1 - fy) * top + fy * bot;
  }
  return true;
}

namespace {

int read_pnm_token(std::istream& in) {
  // Skips whitespace and # comments.
  while (true) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) throw ParseError("truncated PNM header");
  return value;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  Image img;
  if (magic == "P5") {
    img.channels = 1;
  } else if (magic == "P6") {
    img.channels = 3;
  } else {
    throw ParseError("unsupported image format (want binary PGM/PPM): " + path);
  }
  img.width = read_pnm_token(in);
  img.height = read_pnm_token(in);
  const int maxval = read_pnm_token(in);
  if (img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw ParseError("unsupported PNM geometry or depth: " + path);
  }
  in.get();  // single whitespace after header
  img.data.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.data.data()), img.data.size());
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw ParseError("truncated PNM payload: " + path);
  }
  return img;
}

void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), img.data.size());
}

}  // namespace autocalib
