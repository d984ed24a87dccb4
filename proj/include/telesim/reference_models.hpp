#pragma once

#include "telesim/arm_model.hpp"

namespace telesim {

// Desk-scale reference chains used by the bundled scenarios and tests.

/// Single rod about z in the x-y plane, gravity -y. Tip at 1 m.
ArmModel one_link_pendulum(double mass = 1.0, double com_offset = 0.5,
                           double inertia_zz = 1.0 / 12.0, double tip = 1.0,
                           double gravity = 9.81);

/// Two-link planar chain about z, links along x, gravity -y.
ArmModel two_link_planar();

/// Redundant planar chain: three joints about y, links along x, moving in the
/// x-z plane, gravity -z. Task = 2-D position (x,z), nullspace dimension 1.
ArmModel three_link_planar();

/// Seven-joint spatial chain with cobot-like masses and limits.
ArmModel seven_dof_arm();

}  // namespace telesim
