#include "nodef/conversion_model.hpp"

#include <stdexcept>

#include "nodef/numeric.hpp"

namespace nodef {
namespace {

double score(const Vector& x, const Vector& w) {
  if (x.size() != w.size()) throw std::invalid_argument("conversion model: dimension mismatch");
  return w.dot(x);
}

}  // namespace

double conv_prob(const Vector& x, const Vector& w, bool converted) {
  const double z = score(x, w);
  return converted ? sigmoid(z) : sigmoid(-z);
}

Vector grad_log_conv(const Vector& x, const Vector& w, bool converted) {
  const double z = score(x, w);
  return converted ? Vector(x * sigmoid(-z)) : Vector(-x * sigmoid(z));
}

}  // namespace nodef
