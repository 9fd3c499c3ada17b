#pragma once

#include "hybridpf/types.hpp"

namespace hybridpf {

/// Light-load (u) and heavy-load (l) anchor voltages over the non-slack node-phases.
struct AnchorPair {
  CVector v_hat_u;
  CVector v_hat_l;

  Index size() const { return v_hat_u.size(); }

  void validate() const {
    require_size(v_hat_l.size(), v_hat_u.size(), "anchor v_hat_l");
    for (Index m = 0; m < size(); ++m) {
      if (v_hat_u(m) == Complex{} || v_hat_l(m) == Complex{})
        throw InvalidInput("anchor voltage is zero at node-phase " + std::to_string(m));
    }
  }

  bool identifiable() const { return (v_hat_u - v_hat_l).cwiseAbs().maxCoeff() > 0.0; }
};

}  // namespace hybridpf
