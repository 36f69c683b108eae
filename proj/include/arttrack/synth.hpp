#pragma once

// Synthetic scenes with known identities: stick figures in the 14-joint
// vocabulary, walking with sinusoidal sway and swinging limbs, observed
// through noisy, incomplete and cluttered detections.
//
// Motion model for person p at frame t (image coordinates, y down):
//   neck(t) = (x0 + p * spacing + v_p * t + A * sin(w * t + phi_p),
//              y0 + 0.25 * A * sin(2 * w * t + phi_p))
//   swing(t) = 0.4 * sin(w_s * t + psi_p)
// Arms and legs hang from the shoulders and hips and rotate by +/- swing.
// v_p, phi_p, psi_p are drawn per person from the seed.

#include <cstdint>

#include "arttrack/sequence.hpp"

namespace arttrack {

/// Bone lengths in pixels.
struct SkeletonLengths {
  double head = 30.0;        // neck to head top; also the head size
  double shoulder = 22.0;    // neck to each shoulder, horizontally
  double upper_arm = 38.0;
  double forearm = 32.0;
  double torso = 70.0;       // neck to hip line
  double hip = 14.0;         // hip line centre to each hip
  double thigh = 48.0;
  double shin = 44.0;
};

struct SynthConfig {
  int persons = 3;
  int frames = 21;
  SkeletonLengths skeleton;
  double motion_amplitude = 12.0;
  double spacing = 250.0;
  /// Gaussian position noise of detections (pixels, per axis).
  double sigma = 0.0;
  double miss_rate = 0.0;
  /// Probability of one clutter detection per annotated joint.
  double clutter_rate = 0.0;
  std::uint64_t seed = 0;
  int descriptor_dim = 16;
  double grid_step = 16.0;

  /// Throws ConfigError when a value is out of range.
  void check() const;
};

struct SynthScene {
  Sequence sequence;  // detections plus descriptors, correspondences, attachments
  GroundTruth truth;
};

/// Deterministic for a given configuration. With sigma = miss = clutter = 0
/// the detections coincide with the annotated joints.
SynthScene synth_generate(const SynthConfig& config);

}  // namespace arttrack
