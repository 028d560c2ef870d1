#include "egraph/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <limits>
#include <queue>

namespace egraph {

bool should_insert_keyframe(const FrameStats& stats, const KeyframePolicy& policy) {
  return stats.frames_since_keyframe >= policy.max_frame_gap ||
         stats.tracked_ratio < policy.min_tracked_ratio || stats.new_landmark;
}

EGraph EGraph::init(const FrameObservation& first) { return init(first, Options{}); }

EGraph EGraph::init(const FrameObservation& first, const Options& opts) {
  EGraph graph(opts);
  KeyframeNode anchor;
  anchor.id = 0;
  anchor.frame_index = first.frame_index;
  anchor.r_wc = Rotation::identity();  // the anchor frame is the world frame
  anchor.t_wc = Vec3::Zero();
  for (const PointFeature& p : first.points) anchor.point_ids.push_back(p.id);

  InsertSummary summary;
  graph.keyframes_.push_back(anchor);
  graph.process_observations(first, graph.keyframes_.back(), summary);
  return graph;
}

const DirectionLandmark* EGraph::find_direction(int landmark_id) const {
  for (const DirectionLandmark& lm : directions_) {
    if (lm.id == landmark_id) return &lm;
  }
  return nullptr;
}

const PlaneLandmark* EGraph::find_plane(int plane_id) const {
  for (const PlaneLandmark& lm : planes_) {
    if (lm.id == plane_id) return &lm;
  }
  return nullptr;
}

const PlaneLandmark* EGraph::associate_plane(int normal_landmark_id, const UnitVec3& n_w,
                                             double d_w) const {
  const PlaneLandmark* best = nullptr;
  double best_diff = opts_.plane_d_tol;
  for (const PlaneLandmark& pl : planes_) {
    if (pl.normal_landmark_id != normal_landmark_id) continue;
    const double s = n_w.dot(pl.n_w) < 0.0 ? -1.0 : 1.0;
    const double diff = std::abs(s * d_w - pl.d_w);
    if (diff <= best_diff) {
      best_diff = diff;
      best = &pl;
    }
  }
  return best;
}

void EGraph::process_observations(const FrameObservation& obs, KeyframeNode& node,
                                  InsertSummary& summary) {
  const Rotation& r_wc = node.r_wc;
  const Vec3& t_wc = node.t_wc;

  for (const DirectionMeasurement& dm : obs.directions) {
    const DirectionObservation& o = dm.observation;
    const UnitVec3 dir_w = to_world(o.dir_c, r_wc);

    // Match within the observation's own kind: a vanishing direction and a
    // plane normal stay distinct landmarks even when parallel.
    std::vector<DirectionLandmark> candidates;
    for (const DirectionLandmark& lm : directions_) {
      if (lm.kind == o.kind) candidates.push_back(lm);
    }

    if (auto m = match_direction(dir_w, candidates, opts_.th_vd)) {
      ++summary.matched;
      int sign = m->sign;
      for (DirectionLandmark& lm : directions_) {
        if (lm.id == m->landmark_id) {
          const UnitVec3 before = lm.dir_w;
          lm = fuse(lm, dir_w, sign);
          ++summary.fused;
          // Re-canonicalization can flip a landmark whose leading
          // component sits near zero; stored measurements follow the
          // landmark orientation, so flip them with it.
          if (lm.dir_w.dot(before) < 0.0) {
            for (KeyframeNode& kf : keyframes_) {
              for (KeyframeMeasurement& km : kf.measurements) {
                if (km.landmark_id == lm.id) km.dir_c = -km.dir_c;
              }
            }
            sign = -sign;
          }
          break;
        }
      }
      node.measurements.push_back({m->landmark_id, sign > 0 ? o.dir_c : -o.dir_c});

      if (dm.plane_index >= 0) {
        // Fold the full Hessian measurement into the plane landmark whose
        // offset is compatible; parallel planes at different distances
        // stay distinct. A genuinely new offset spawns a new plane record
        // under the shared normal landmark.
        const PlaneMeasurement& pm = obs.planes[dm.plane_index];
        const UnitVec3 n_w = to_world(pm.n_c, r_wc);
        const double d_w = pm.d_c - n_w.vec().dot(t_wc);
        if (const PlaneLandmark* found = associate_plane(m->landmark_id, n_w, d_w)) {
          for (PlaneLandmark& pl : planes_) {
            if (pl.id != found->id) continue;
            const double s = n_w.dot(pl.n_w) < 0.0 ? -1.0 : 1.0;
            pl.n_w = UnitVec3::normalized(pl.support_count * pl.n_w.vec() + s * n_w.vec());
            pl.d_w = (pl.support_count * pl.d_w + s * d_w) / (pl.support_count + 1);
            pl.support_count += 1;
            break;
          }
        } else {
          planes_.push_back({next_landmark_id_++, m->landmark_id, n_w, d_w, 1});
        }
      }
      continue;
    }

    if (o.kind == DirectionKind::VanishingDirection) {
      // Unmatched line direction: try the potential directions; a hit
      // promotes the potential to a full landmark seen by both frames.
      std::vector<DirectionLandmark> pd_view;
      for (const PotentialDirection& pd : potentials_) {
        pd_view.push_back({pd.id, pd.dir_w, 1, DirectionKind::VanishingDirection});
      }
      if (auto m = match_direction(dir_w, pd_view, opts_.th_vd)) {
        auto it = std::find_if(potentials_.begin(), potentials_.end(),
                               [&](const PotentialDirection& pd) { return pd.id == m->landmark_id; });
        DirectionLandmark promoted{m->landmark_id, it->dir_w, 1,
                                   DirectionKind::VanishingDirection};
        int sign = m->sign;
        promoted = fuse(promoted, dir_w, sign);
        UnitVec3 born_dir = it->dir_c_born;
        if (promoted.dir_w.dot(it->dir_w) < 0.0) {  // canonical flip during the fuse
          born_dir = -born_dir;
          sign = -sign;
        }
        directions_.push_back(promoted);

        for (KeyframeNode& kf : keyframes_) {
          if (kf.id == it->born_at) {
            kf.measurements.push_back({m->landmark_id, born_dir});
            break;
          }
        }
        node.measurements.push_back({m->landmark_id, sign > 0 ? o.dir_c : -o.dir_c});
        potentials_.erase(it);
        ++summary.promotions;
        summary.new_landmarks += 1;
        continue;
      }
      if (o.source == ObservationSource::LoneLine) {
        auto [canon, sign] = canonicalize(dir_w);
        potentials_.push_back(
            {next_landmark_id_++, canon, sign > 0 ? o.dir_c : -o.dir_c, node.id});
        continue;
      }
    }

    // New landmark: store the canonical world direction and, for planes,
    // the Hessian form oriented toward this first observer.
    auto [canon, sign] = canonicalize(dir_w);
    const int id = next_landmark_id_++;
    directions_.push_back({id, canon, 1, o.kind});
    node.measurements.push_back({id, sign > 0 ? o.dir_c : -o.dir_c});
    ++summary.new_landmarks;

    if (dm.plane_index >= 0) {
      const PlaneMeasurement& pm = obs.planes[dm.plane_index];
      const UnitVec3 n_w = to_world(pm.n_c, r_wc);
      planes_.push_back({next_landmark_id_++, id, n_w, pm.d_c - n_w.vec().dot(t_wc), 1});
    }
  }

  // Potentials not promoted within the horizon are dropped.
  const int cutoff = node.id - opts_.pd_expiry_keyframes;
  const auto expired = std::count_if(potentials_.begin(), potentials_.end(),
                                     [&](const PotentialDirection& pd) { return pd.born_at <= cutoff; });
  summary.expired_potentials += static_cast<int>(expired);
  std::erase_if(potentials_, [&](const PotentialDirection& pd) { return pd.born_at <= cutoff; });
}

void EGraph::connect_edges(KeyframeNode& node, InsertSummary& summary) {
  for (const KeyframeNode& prior : keyframes_) {
    if (prior.id == node.id) continue;

    std::vector<std::pair<KeyframeMeasurement, KeyframeMeasurement>> shared;  // (prior, node)
    std::vector<int> shared_ids;
    for (const KeyframeMeasurement& ma : prior.measurements) {
      for (const KeyframeMeasurement& mb : node.measurements) {
        if (ma.landmark_id == mb.landmark_id) {
          shared.push_back({ma, mb});
          if (std::find(shared_ids.begin(), shared_ids.end(), ma.landmark_id) ==
              shared_ids.end()) {
            shared_ids.push_back(ma.landmark_id);
          }
        }
      }
    }
    if (static_cast<int>(shared_ids.size()) < opts_.min_edge_shared) continue;

    // The shared set must span two directions; a vanishing direction plus
    // a parallel plane normal cannot fix the rotation.
    double best_sin = 0.0;
    for (size_t i = 0; i < shared.size(); ++i) {
      for (size_t j = i + 1; j < shared.size(); ++j) {
        const DirectionLandmark* a = find_direction(shared[i].first.landmark_id);
        const DirectionLandmark* b = find_direction(shared[j].first.landmark_id);
        if (a && b) best_sin = std::max(best_sin, a->dir_w.cross(b->dir_w).norm());
      }
    }
    if (best_sin <= kDegenerateSin) {
      ++summary.degenerate_pairs;
      continue;
    }

    MatchedDirectionSet pairs;
    for (const auto& [ma, mb] : shared) pairs.push_back({ma.dir_c, mb.dir_c, 1.0});
    Rotation r_ab;
    try {
      r_ab = rotation_from_matches(pairs);
    } catch (const DegeneracyError&) {
      ++summary.degenerate_pairs;
      continue;
    }

    double residual = 0.0;
    for (const auto& [ma, mb] : shared) residual += (r_ab * mb.dir_c).angle_to(ma.dir_c);
    residual /= static_cast<double>(shared.size());

    GraphEdge edge;
    edge.a = prior.id;
    edge.b = node.id;
    edge.shared_landmarks = shared_ids;
    edge.r_ab = r_ab;
    edge.residual = residual;
    summary.new_edges.push_back(static_cast<int>(edges_.size()));
    edges_.push_back(std::move(edge));
  }
}

InsertSummary EGraph::insert_keyframe(const FrameObservation& obs, const Rotation& r_wc,
                                      const Vec3& t_wc) {
  if (keyframes_.empty()) {
    throw std::logic_error("insert_keyframe: graph not initialized (call EGraph::init)");
  }
  InsertSummary summary;
  KeyframeNode node;
  node.id = static_cast<int>(keyframes_.size());
  node.frame_index = obs.frame_index;
  node.r_wc = r_wc;
  node.t_wc = t_wc;
  for (const PointFeature& p : obs.points) node.point_ids.push_back(p.id);
  summary.keyframe_id = node.id;

  keyframes_.push_back(std::move(node));
  process_observations(obs, keyframes_.back(), summary);
  connect_edges(keyframes_.back(), summary);
  return summary;
}

std::optional<std::pair<Rotation, std::vector<int>>> EGraph::relative_rotation(int a,
                                                                               int b) const {
  const auto valid = [&](int id) {
    return id >= 0 && id < static_cast<int>(keyframes_.size());
  };
  if (!valid(a) || !valid(b)) return std::nullopt;
  if (a == b) return std::make_pair(Rotation::identity(), std::vector<int>{});

  // Lexicographic Dijkstra: minimize hops first, then the summed edge
  // residual. Each edge is drift-free by construction, so hop count is the
  // noise proxy.
  const int n = static_cast<int>(keyframes_.size());
  std::vector<std::vector<int>> adjacency(n);
  for (size_t e = 0; e < edges_.size(); ++e) {
    adjacency[edges_[e].a].push_back(static_cast<int>(e));
    adjacency[edges_[e].b].push_back(static_cast<int>(e));
  }

  using Cost = std::pair<int, double>;  // (hops, residual sum)
  const Cost inf{std::numeric_limits<int>::max(), 0.0};
  std::vector<Cost> cost(n, inf);
  std::vector<int> via_edge(n, -1), via_node(n, -1);
  std::priority_queue<std::pair<Cost, int>, std::vector<std::pair<Cost, int>>, std::greater<>>
      queue;
  cost[a] = {0, 0.0};
  queue.push({cost[a], a});

  while (!queue.empty()) {
    auto [c, u] = queue.top();
    queue.pop();
    if (c > cost[u]) continue;
    if (u == b) break;
    for (int ei : adjacency[u]) {
      const GraphEdge& edge = edges_[ei];
      const int v = edge.a == u ? edge.b : edge.a;
      const Cost nc{c.first + 1, c.second + edge.residual};
      if (nc < cost[v]) {
        cost[v] = nc;
        via_edge[v] = ei;
        via_node[v] = u;
        queue.push({nc, v});
      }
    }
  }
  if (cost[b] == inf) return std::nullopt;

  std::vector<int> path;
  for (int v = b; v != -1; v = via_node[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());

  Rotation r_ab = Rotation::identity();
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const GraphEdge& edge = edges_[via_edge[path[i + 1]]];
    const Rotation step = edge.a == path[i] ? edge.r_ab : edge.r_ab.transposed();
    r_ab = r_ab * step;
  }
  return std::make_pair(r_ab, path);
}

GraphStats EGraph::stats() const {
  GraphStats s;
  s.keyframe_count = static_cast<int>(keyframes_.size());
  int vd_count = 0;
  for (const DirectionLandmark& lm : directions_) {
    if (lm.kind == DirectionKind::VanishingDirection) ++vd_count;
    s.support_histogram[lm.support_count] += 1;
  }
  s.landmark_count =
      vd_count + static_cast<int>(planes_.size()) + static_cast<int>(potentials_.size());
  s.edge_count = static_cast<int>(edges_.size());

  double span_sum = 0.0;
  for (const GraphEdge& e : edges_) {
    s.max_span = std::max(s.max_span, e.span());
    span_sum += e.span();
  }
  s.mean_span = edges_.empty() ? 0.0 : span_sum / static_cast<double>(edges_.size());

  // Connected components over keyframe nodes.
  std::vector<int> comp(keyframes_.size(), -1);
  int n_comp = 0;
  for (size_t start = 0; start < keyframes_.size(); ++start) {
    if (comp[start] != -1) continue;
    ++n_comp;
    std::deque<int> frontier{static_cast<int>(start)};
    comp[start] = n_comp;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (const GraphEdge& e : edges_) {
        const int v = e.a == u ? e.b : (e.b == u ? e.a : -1);
        if (v != -1 && comp[v] == -1) {
          comp[v] = n_comp;
          frontier.push_back(v);
        }
      }
    }
  }
  s.connected_components = n_comp;
  return s;
}

std::string EGraph::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;

  nlohmann::json kfs = nlohmann::json::array();
  for (const KeyframeNode& kf : keyframes_) {
    const UnitQuaternion q = UnitQuaternion::from_rotation(kf.r_wc);
    nlohmann::json item;
    item["id"] = kf.id;
    item["frame_index"] = kf.frame_index;
    item["t"] = {kf.t_wc.x(), kf.t_wc.y(), kf.t_wc.z()};
    item["q"] = {q.qx, q.qy, q.qz, q.qw};
    item["point_ids"] = kf.point_ids;
    nlohmann::json obs = nlohmann::json::array();
    for (const KeyframeMeasurement& m : kf.measurements) obs.push_back(m.landmark_id);
    item["landmark_ids"] = obs;
    kfs.push_back(item);
  }
  j["keyframes"] = kfs;

  nlohmann::json lms = nlohmann::json::array();
  for (const DirectionLandmark& lm : directions_) {
    lms.push_back({{"id", lm.id},
                   {"kind", lm.kind == DirectionKind::VanishingDirection ? "vanishing_direction"
                                                                         : "plane_normal"},
                   {"dir", {lm.dir_w.x(), lm.dir_w.y(), lm.dir_w.z()}},
                   {"support", lm.support_count}});
  }
  j["direction_landmarks"] = lms;

  nlohmann::json pls = nlohmann::json::array();
  for (const PlaneLandmark& pl : planes_) {
    pls.push_back({{"id", pl.id},
                   {"normal_landmark_id", pl.normal_landmark_id},
                   {"n", {pl.n_w.x(), pl.n_w.y(), pl.n_w.z()}},
                   {"d", pl.d_w},
                   {"support", pl.support_count}});
  }
  j["plane_landmarks"] = pls;

  nlohmann::json eds = nlohmann::json::array();
  for (const GraphEdge& e : edges_) {
    eds.push_back({{"a", e.a},
                   {"b", e.b},
                   {"span", e.span()},
                   {"shared_landmarks", e.shared_landmarks},
                   {"residual", e.residual}});
  }
  j["edges"] = eds;
  return j.dump(2);
}

std::vector<CovisibilityEdge> build_covisibility_graph(std::span<const KeyframeNode> keyframes,
                                                       int min_shared) {
  std::vector<CovisibilityEdge> edges;
  for (size_t i = 0; i < keyframes.size(); ++i) {
    for (size_t j = i + 1; j < keyframes.size(); ++j) {
      int shared = 0;
      for (int pa : keyframes[i].point_ids) {
        for (int pb : keyframes[j].point_ids) {
          if (pa == pb) {
            ++shared;
            break;
          }
        }
      }
      if (shared >= min_shared) {
        edges.push_back({keyframes[i].id, keyframes[j].id, shared});
      }
    }
  }
  return edges;
}

GraphExport parse_graph_export(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  GraphExport out;
  for (const auto& item : j.at("keyframes")) {
    GraphExport::Keyframe kf;
    kf.id = item.at("id").get<int>();
    kf.frame_index = item.at("frame_index").get<int>();
    kf.point_ids = item.at("point_ids").get<std::vector<int>>();
    out.keyframes.push_back(std::move(kf));
  }
  for (const auto& item : j.at("edges")) {
    out.edges.push_back({item.at("a").get<int>(), item.at("b").get<int>(),
                         static_cast<int>(item.at("shared_landmarks").size()),
                         item.at("residual").get<double>()});
  }
  return out;
}

}  // namespace egraph
