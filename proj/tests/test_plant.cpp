#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resloco/plant.hpp"
#include "resloco/rng.hpp"
#include "resloco/srbm.hpp"

using namespace resloco;

namespace {

PlantConfig nominal_config() {
  PlantConfig cfg;
  return cfg;
}

VecX standing_joints(const Plant& plant) {
  VecX theta(kNumJoints);
  const LegGeometry& legs = plant.config().legs;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 target(0.0, legs.side_sign(leg) * legs.abd_offset, -0.28);
    theta.segment<3>(3 * leg) = leg_ik(target, leg, legs).theta;
  }
  return theta;
}

}  // namespace

TEST_CASE("composite mass properties") {
  PlantConfig cfg = nominal_config();
  cfg.payloads.push_back({6.0, Vec3(0.15, 0.0, 0.05)});
  const Plant plant(cfg);
  CHECK(plant.composite_mass() == doctest::Approx(18.0));
  // CoM shifts toward the payload
  CHECK(plant.composite_com_offset().x() ==
        doctest::Approx(6.0 * 0.15 / 18.0));
  // parallel axis only adds positive-definite terms
  Eigen::SelfAdjointEigenSolver<Mat3> es(plant.composite_inertia() -
                                         cfg.base_inertia);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("free fall conserves mechanical energy to 1e-6 over 1 s") {
  PlantConfig cfg = nominal_config();
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 30.0), Vec3(0.1, -0.05, 0.3), Vec3(0.4, -0.2, 0.0),
                 Vec3(0.7, -0.9, 1.3), VecX::Zero(kNumJoints));
  const double e0 = plant.mechanical_energy();
  const VecX tau = VecX::Zero(kNumJoints);
  for (int i = 0; i < 1000; ++i) plant.step(tau);
  REQUIRE_FALSE(plant.state().failed);
  const double e1 = plant.mechanical_energy();
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-6);
}

TEST_CASE("zero torque from standing leads to failure within 1 s") {
  PlantConfig cfg = nominal_config();
  Plant plant(cfg);
  Plant* p = &plant;
  p->set_pose(Vec3(0, 0, 0.28), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
              standing_joints(plant));
  const VecX tau = VecX::Zero(kNumJoints);
  bool failed = false;
  for (int i = 0; i < 1000 && !failed; ++i) {
    p->step(tau);
    failed = check_failure(p->state(), p->terrain());
  }
  CHECK(failed);
}

TEST_CASE("failure predicate thresholds") {
  const Terrain flat{TerrainConfig{}};
  PlantState s;
  s.body.p = Vec3(0, 0, 0.28);
  CHECK_FALSE(check_failure(s, flat));
  s.body.phi.x() = 1.2;
  CHECK(check_failure(s, flat));
  s.body.phi.x() = 1.0;  // boundary is strict
  CHECK_FALSE(check_failure(s, flat));
  s.body.phi.x() = 0.0;
  s.body.p.z() = 0.09;
  CHECK(check_failure(s, flat));
  s.body.p.z() = 0.28;
  s.failed = true;
  CHECK(check_failure(s, flat));
}

TEST_CASE("stance GRF realization inverts the torque map") {
  PlantConfig cfg = nominal_config();
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 0.28), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                 standing_joints(plant));
  for (int leg = 0; leg < kNumLegs; ++leg)
    plant.set_leg_stance(leg, plant.foot_world(leg));

  const Vec3 desired(3.0, -2.0, 40.0);  // inside the cone at mu = 0.8
  VecX tau(kNumJoints);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 theta = plant.state().theta.segment<3>(3 * leg);
    tau.segment<3>(3 * leg) =
        leg_jacobian(theta, leg, cfg.legs).transpose() * (-desired);
  }
  plant.step(tau);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    CHECK((plant.realized_grf()[leg] - desired).lpNorm<Eigen::Infinity>() <
          1e-6);
    CHECK_FALSE(plant.slipping()[leg]);
  }
}

TEST_CASE("friction cone clamp produces slip and foot drift") {
  PlantConfig cfg = nominal_config();
  cfg.terrain.friction = 0.4;
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 0.28), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                 standing_joints(plant));
  for (int leg = 0; leg < kNumLegs; ++leg)
    plant.set_leg_stance(leg, plant.foot_world(leg));
  const Vec3 before = plant.pinned_foothold(kFR);

  const Vec3 desired(30.0, 0.0, 40.0);  // tangential beyond mu * normal
  VecX tau(kNumJoints);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 theta = plant.state().theta.segment<3>(3 * leg);
    tau.segment<3>(3 * leg) =
        leg_jacobian(theta, leg, cfg.legs).transpose() * (-desired);
  }
  plant.step(tau);
  const Vec3 grf = plant.realized_grf()[kFR];
  CHECK(plant.slipping()[kFR]);
  CHECK(std::hypot(grf.x(), grf.y()) <=
        cfg.terrain.friction * grf.z() + 1e-9);
  // foot drifts against the demanded shear
  CHECK(plant.pinned_foothold(kFR).x() < before.x());

  // pulling never happens
  for (int leg = 0; leg < kNumLegs; ++leg)
    CHECK(plant.realized_grf()[leg].z() >= 0.0);
}

TEST_CASE("touchdown impulse cancels the foot's downward velocity") {
  PlantConfig cfg = nominal_config();
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 0.30), Vec3::Zero(), Vec3(0, 0, -0.8),
                 Vec3::Zero(), standing_joints(plant));
  const double vz_before = plant.foot_velocity_world(kFR).z();
  REQUIRE(vz_before < 0.0);
  plant.set_leg_stance(kFR, plant.foot_world(kFR));
  const double vz_after = plant.foot_velocity_world(kFR).z();
  CHECK(std::abs(vz_after) < 1e-9);
}

TEST_CASE("mid-episode payload attach preserves trunk pose and velocity") {
  PlantConfig cfg = nominal_config();
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 0.28), Vec3(0.05, -0.02, 0.4), Vec3(0.3, 0.1, 0),
                 Vec3(0.2, 0, -0.1), standing_joints(plant));
  const Vec3 trunk_before = plant.trunk_origin();
  const Vec3 v_before = plant.state().body.v;
  plant.attach_payload({6.0, Vec3(0.15, 0.0, 0.05)});
  CHECK((plant.trunk_origin() - trunk_before).lpNorm<Eigen::Infinity>() <
        1e-12);
  CHECK((plant.state().body.v - v_before).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(plant.composite_mass() == doctest::Approx(18.0));
  // the reported CoM moved toward the payload
  CHECK(plant.state().body.p.x() > trunk_before.x());
}

TEST_CASE("scheduled wrench pushes the body") {
  PlantConfig cfg = nominal_config();
  DisturbanceEvent ev;
  ev.time = 0.0;
  ev.duration = 0.1;
  ev.force = Vec3(0.0, 150.0, 0.0);
  cfg.disturbances.push_back(ev);
  Plant plant(cfg);
  plant.set_pose(Vec3(0, 0, 1.0), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                 VecX::Zero(kNumJoints));
  for (int i = 0; i < 100; ++i) plant.step(VecX::Zero(kNumJoints));
  // impulse 15 N s on 12 kg -> 1.25 m/s
  CHECK(plant.state().body.v.y() == doctest::Approx(1.25).epsilon(1e-6));
}

TEST_CASE("NaN torque aborts the episode with the failure flag") {
  Plant plant(nominal_config());
  plant.set_pose(Vec3(0, 0, 0.5), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                 VecX::Zero(kNumJoints));
  VecX tau = VecX::Zero(kNumJoints);
  tau[0] = std::numeric_limits<double>::quiet_NaN();
  plant.step(tau);
  CHECK(plant.state().failed);
}
