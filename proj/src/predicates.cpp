#include "pflux/predicates.hpp"

#include <gmpxx.h>

#include <cmath>
#include <limits>

namespace pflux::predicates {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

int sign(const mpq_class& v) { return sgn(v); }

}  // namespace

int orient2d(const Point& a, const Point& b, const Point& c) {
  const double detl = (a.x() - c.x()) * (b.y() - c.y());
  const double detr = (a.y() - c.y()) * (b.x() - c.x());
  const double det = detl - detr;
  const double bound = (3.0 + 16.0 * kEps) * kEps * (std::abs(detl) + std::abs(detr));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const mpq_class ax(a.x()), ay(a.y()), bx(b.x()), by(b.y()), cx(c.x()), cy(c.y());
  return sign(mpq_class((ax - cx) * (by - cy) - (ay - cy) * (bx - cx)));
}

int incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double bc = bdx * cdy - bdy * cdx;
  const double ca = cdx * ady - cdy * adx;
  const double ab = adx * bdy - ady * bdx;
  const double det = alift * bc + blift * ca + clift * ab;
  const double permanent = (std::abs(bdx * cdy) + std::abs(bdy * cdx)) * alift +
                           (std::abs(cdx * ady) + std::abs(cdy * adx)) * blift +
                           (std::abs(adx * bdy) + std::abs(ady * bdx)) * clift;
  const double bound = (10.0 + 96.0 * kEps) * kEps * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const mpq_class dx(d.x()), dy(d.y());
  const mpq_class qax = mpq_class(a.x()) - dx, qay = mpq_class(a.y()) - dy;
  const mpq_class qbx = mpq_class(b.x()) - dx, qby = mpq_class(b.y()) - dy;
  const mpq_class qcx = mpq_class(c.x()) - dx, qcy = mpq_class(c.y()) - dy;
  const mpq_class exact = (qax * qax + qay * qay) * (qbx * qcy - qby * qcx) +
                          (qbx * qbx + qby * qby) * (qcx * qay - qcy * qax) +
                          (qcx * qcx + qcy * qcy) * (qax * qby - qay * qbx);
  return sign(exact);
}

}  // namespace pflux::predicates
