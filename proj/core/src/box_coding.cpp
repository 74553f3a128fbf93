#include "leafdet/box_coding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

BoxDelta encode(const BBox& target, const BBox& anchor) {
  const double wa = anchor.width();
  const double ha = anchor.height();
  return BoxDelta{
      (target.center_x() - anchor.center_x()) / wa,
      (target.center_y() - anchor.center_y()) / ha,
      std::log(target.width() / wa),
      std::log(target.height() / ha),
  };
}

BBox decode(const BoxDelta& delta, const BBox& anchor) {
  if (!(std::isfinite(delta.tx) && std::isfinite(delta.ty) &&
        std::isfinite(delta.tw) && std::isfinite(delta.th))) {
    throw ValidationError("box delta has a non-finite component");
  }
  const double wa = anchor.width();
  const double ha = anchor.height();
  const double cx = anchor.center_x() + delta.tx * wa;
  const double cy = anchor.center_y() + delta.ty * ha;
  const double w = wa * std::exp(std::clamp(delta.tw, -kMaxLogScale, kMaxLogScale));
  const double h = ha * std::exp(std::clamp(delta.th, -kMaxLogScale, kMaxLogScale));
  auto box = BBox::try_make(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
  if (!box) {
    std::ostringstream msg;
    msg << "decoded box is not representable for delta (" << delta.tx << ", "
        << delta.ty << ", " << delta.tw << ", " << delta.th << ")";
    throw ValidationError(msg.str());
  }
  return *box;
}

}  // namespace leafdet
