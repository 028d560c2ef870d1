// Benchmark comparing the OpenMP kernels against their serial reference:
// frame observation generation (run_sequence) and the Monte-Carlo noise
// sweep. Also cross-checks that both paths produce identical output.

#include "egraph/parallel.hpp"
#include "egraph/sweep.hpp"

#include <chrono>
#include <cstdio>

using namespace egraph;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Fn>
double time_best_of(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", max_threads());

  {
    ExperimentConfig cfg = preset("manhattan");
    cfg.trajectory.frame_count = 600;
    cfg.noise = {0.2, 0.005, 0.003, 0.5};
    const Scene scene = generate_scene(cfg.scene, cfg.seed);
    const auto poses = generate_trajectory(cfg.trajectory);

    std::vector<FrameObservation> serial_frames, parallel_frames;
    const double t_serial = time_best_of(3, [&] {
      serial_frames = run_sequence(scene, poses, cfg.camera, cfg.noise, 7, false);
    });
    const double t_parallel = time_best_of(3, [&] {
      parallel_frames = run_sequence(scene, poses, cfg.camera, cfg.noise, 7, true);
    });

    bool identical = serial_frames.size() == parallel_frames.size();
    for (size_t i = 0; identical && i < serial_frames.size(); ++i) {
      identical = serial_frames[i].points.size() == parallel_frames[i].points.size() &&
                  serial_frames[i].directions.size() == parallel_frames[i].directions.size();
      for (size_t k = 0; identical && k < serial_frames[i].points.size(); ++k) {
        identical = serial_frames[i].points[k].p_c == parallel_frames[i].points[k].p_c;
      }
    }
    std::printf("run_sequence (600 frames)   serial %7.3f s   openmp %7.3f s   speedup %.2fx   %s\n",
                t_serial, t_parallel, t_serial / t_parallel,
                identical ? "outputs identical" : "OUTPUT MISMATCH");
  }

  {
    ExperimentConfig cfg = preset("manhattan");
    cfg.trajectory.frame_count = 40;
    const double sigmas[] = {0.0, 0.1, 0.2, 0.5};
    std::vector<SweepRow> serial_rows, parallel_rows;
    const double t_serial = time_best_of(2, [&] { serial_rows = run_sweep(cfg, sigmas, 8, false); });
    const double t_parallel =
        time_best_of(2, [&] { parallel_rows = run_sweep(cfg, sigmas, 8, true); });
    const bool identical = sweep_to_csv(serial_rows) == sweep_to_csv(parallel_rows);
    std::printf("run_sweep (4 cells x 8)     serial %7.3f s   openmp %7.3f s   speedup %.2fx   %s\n",
                t_serial, t_parallel, t_serial / t_parallel,
                identical ? "outputs identical" : "OUTPUT MISMATCH");
    if (!identical) return 1;
  }
  return 0;
}
