#include "core/transforms.hpp"

namespace rsnf {

std::vector<CD> map_point(const PermissibleMap<CD>& map, const std::vector<CD>& p) {
  switch (map.kind) {
    case MapKind::change: {
      std::vector<CD> out;
      for (const auto& c : map.fwd) out.push_back(c.eval(p));
      return out;
    }
    case MapKind::blowup: {
      std::vector<CD> out = p;
      int c0 = map.center_vars[0];
      for (size_t i = 1; i < map.center_vars.size(); ++i) {
        int j = map.center_vars[i];
        out[j] = p[c0] * (p[j] + map.xi[i - 1]);
      }
      return out;
    }
    case MapKind::ramification: {
      std::vector<CD> out = p;
      out[0] = std::pow(p[0], double(map.ram_exp));
      return out;
    }
    case MapKind::shearing: {
      std::vector<CD> out = p;
      for (size_t j = 1; j < p.size(); ++j)
        out[j] = p[j] * std::pow(p[0], double(map.shear_exp[j - 1]));
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<CD> unmap_point(const PermissibleMap<CD>& map, const std::vector<CD>& p) {
  switch (map.kind) {
    case MapKind::change: {
      std::vector<CD> out;
      for (const auto& c : map.inv) out.push_back(c.eval(p));
      return out;
    }
    case MapKind::blowup: {
      int c0 = map.center_vars[0];
      if (std::abs(p[c0]) == 0.0)
        throw std::domain_error("unmap_point: point on the exceptional divisor");
      std::vector<CD> out = p;
      for (size_t i = 1; i < map.center_vars.size(); ++i) {
        int j = map.center_vars[i];
        out[j] = p[j] / p[c0] - map.xi[i - 1];
      }
      return out;
    }
    case MapKind::ramification: {
      if (std::abs(p[0]) == 0.0)
        throw std::domain_error("unmap_point: point on the ramification center");
      std::vector<CD> out = p;
      out[0] = std::pow(p[0], 1.0 / double(map.ram_exp));
      return out;
    }
    case MapKind::shearing: {
      if (std::abs(p[0]) == 0.0)
        throw std::domain_error("unmap_point: point on the shearing divisor");
      std::vector<CD> out = p;
      for (size_t j = 1; j < p.size(); ++j)
        out[j] = p[j] / std::pow(p[0], double(map.shear_exp[j - 1]));
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace rsnf
