#include "nds/building.hpp"

#include <cmath>
#include <sstream>

namespace nds {

namespace {

std::string room_name(int i, int j) {
  return "x" + std::to_string(i) + std::to_string(j);
}

void check_options(const BuildingOptions& opt) {
  if (opt.floors < 1 || opt.rooms < 1) throw NumericError("building needs floors, rooms >= 1");
  if (static_cast<int>(opt.g_bodies.size()) < opt.rooms)
    throw NumericError("building needs one g per room column");
  if (opt.floors > 9 || opt.rooms > 9) throw NumericError("building naming supports up to 9x9");
  if (!(opt.half_width > 0.0)) throw NumericError("building domain half width must be positive");
}

void emit_header(std::ostream& os, const BuildingOptions& opt, const char* name) {
  os << "system " << name << "\n";
  os << "params { epsilon = " << opt.epsilon << "; k = " << opt.k << " }\n";
  os << "func f(x) = " << opt.f_body << "\n";
  for (int j = 0; j < opt.rooms; ++j) os << "func g" << (j + 1) << "(x) = " << opt.g_bodies[j]
                                         << "\n";
}

}  // namespace

std::string building_raw_source(const BuildingOptions& opt) {
  check_options(opt);
  std::ostringstream os;
  os.precision(17);
  emit_header(os, opt, "building_raw");
  for (int i = 1; i <= opt.floors; ++i)
    for (int j = 1; j <= opt.rooms; ++j) {
      os << "dyn " << room_name(i, j) << " =";
      bool first = true;
      auto plus = [&first, &os](bool negative) {
        os << (negative ? " - " : (first ? " " : " + "));
        first = false;
      };
      if (j < opt.rooms) {
        plus(false);
        os << "f(" << room_name(i, j + 1) << " - " << room_name(i, j) << ")";
      }
      if (j > 1) {
        plus(true);
        os << "f(" << room_name(i, j) << " - " << room_name(i, j - 1) << ")";
      }
      if (i < opt.floors) {
        plus(false);
        os << "epsilon*g" << j << "(" << room_name(i + 1, j) << " - " << room_name(i, j) << ")";
      }
      if (i > 1) {
        plus(true);
        os << "epsilon*g" << j << "(" << room_name(i, j) << " - " << room_name(i - 1, j) << ")";
      }
      os << "\n";
    }
  os << "domain ";
  bool first = true;
  for (int i = 1; i <= opt.floors; ++i)
    for (int j = 1; j <= opt.rooms; ++j) {
      if (!first) os << "; ";
      first = false;
      os << room_name(i, j) << " in [" << -opt.half_width << ", " << opt.half_width << "]";
    }
  os << "\n";
  return os.str();
}

SystemSpec building_raw(const BuildingOptions& opt) {
  return parse_system(building_raw_source(opt));
}

std::string building_barycentric_source(const BuildingOptions& opt) {
  check_options(opt);
  if (opt.floors != 2 || opt.rooms != 2)
    throw NumericError("barycentric coordinates are defined for the 2x2 building only");
  std::ostringstream os;
  os.precision(17);
  emit_header(os, opt, "building");
  os << "fast d1, d2\n";
  os << "slow D\n";
  os << "dyn d1 = -f(d1) + (epsilon/2)*(g2(D + d2 - d1) - g1(D + d1 - d2))\n";
  os << "dyn d2 = -f(d2) + (epsilon/2)*(g1(D + d1 - d2) - g2(D + d2 - d1))\n";
  os << "dyn D = -epsilon*(g1(D + d1 - d2) + g2(D + d2 - d1))\n";
  os << "domain d1 in [" << -opt.half_width << ", " << opt.half_width << "]; d2 in ["
     << -opt.half_width << ", " << opt.half_width << "]; D in [" << -opt.half_width << ", "
     << opt.half_width << "]\n";
  return os.str();
}

SystemSpec building_barycentric(const BuildingOptions& opt) {
  return parse_system(building_barycentric_source(opt));
}

Vec raw_to_barycentric(const Vec& x4) {
  if (x4.size() != 4) throw NumericError("raw building state must have 4 components");
  Vec d(3);
  d[0] = 0.5 * (x4[1] - x4[0]);                      // d1
  d[1] = 0.5 * (x4[3] - x4[2]);                      // d2
  d[2] = 0.5 * ((x4[3] + x4[2]) - (x4[1] + x4[0]));  // D
  return d;
}

Vec barycentric_to_raw(const Vec& d3, double total) {
  if (d3.size() != 3) throw NumericError("barycentric state must have 3 components");
  double s1 = 0.5 * total - d3[2];  // x11 + x12
  double s2 = 0.5 * total + d3[2];  // x21 + x22
  Vec x(4);
  x[0] = 0.5 * s1 - d3[0];
  x[1] = 0.5 * s1 + d3[0];
  x[2] = 0.5 * s2 - d3[1];
  x[3] = 0.5 * s2 + d3[1];
  return x;
}

GainConstants building_reference_gains() {
  GainConstants gc;
  gc.chi_f = 1.0;
  gc.beta_f = 0.5;
  gc.chi_g = 1.0;
  gc.beta_g = 0.25;
  gc.d_f = 0.75;
  gc.a_fx = std::sqrt(2.0) / 4.0;
  gc.a_fy = 0.75;
  gc.d_g = 1.0;
  gc.a_gx = std::sqrt(2.0) / 2.0;
  return gc;
}

}  // namespace nds
