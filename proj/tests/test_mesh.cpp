/// Space-time meshes: box builders, time extrusion, boundary classification,
/// the cylinder channel mesh and the text exchange format.
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "stvms/mapping.hpp"
#include "stvms/mesh.hpp"

using namespace stvms;

namespace {

// Face conformity oracle: corner-node keys of element faces must appear once
// (exterior) or twice (interior).
std::map<std::vector<int>, int> face_multiplicities(const SpaceTimeMesh& mesh) {
  std::map<std::vector<int>, int> faces;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int f = 0; f < 2 * mesh.dim; ++f) {
      std::vector<int> key;
      for (int l : element_face_nodes(mesh.dim, mesh.order, f))
        key.push_back(nodes[l]);
      std::sort(key.begin(), key.end());
      faces[key]++;
    }
  }
  return faces;
}

}  // namespace

TEST_CASE("box mesh counting") {
  std::vector<double> ext3 = {1, 1, 1};
  std::vector<int> cnt3 = {2, 2, 2};
  SpaceTimeMesh m1 = build_box_mesh(3, ext3, cnt3, 1);
  CHECK(m1.n_elems() == 8);
  CHECK(m1.n_nodes() == 27);

  std::vector<double> ext4 = {1, 1, 1, 1};
  std::vector<int> cnt4 = {1, 1, 1, 1};
  SpaceTimeMesh m2 = build_box_mesh(4, ext4, cnt4, 1);
  CHECK(m2.n_elems() == 1);
  CHECK(m2.n_nodes() == 16);

  SpaceTimeMesh m3 = build_box_mesh(3, ext3, cnt3, 2);
  CHECK(m3.n_elems() == 8);
  CHECK(m3.n_nodes() == 125);
}

TEST_CASE("box mesh rejects bad input") {
  std::vector<double> bad_ext = {0.0, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  CHECK_THROWS_AS((void)build_box_mesh(3, bad_ext, cnt, 1),
                  std::invalid_argument);
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> bad_cnt = {2, 0, 2};
  CHECK_THROWS_AS((void)build_box_mesh(3, ext, bad_cnt, 1),
                  std::invalid_argument);
}

TEST_CASE("element node indices are in range and distinct") {
  std::vector<double> ext = {1, 2, 0.5, 1};
  std::vector<int> cnt = {2, 3, 2, 2};
  SpaceTimeMesh mesh = build_box_mesh(4, ext, cnt, 1);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    std::vector<int> sorted(nodes.begin(), nodes.end());
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted.front() >= 0);
    CHECK(sorted.back() < mesh.n_nodes());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("extrusion: node count and GammaT facet count") {
  std::vector<double> ext = {1, 1};
  std::vector<int> cnt = {1, 1};
  SpatialMesh square = build_spatial_box(2, ext, cnt, 1);
  SpaceTimeMesh one = extrude_in_time(square, 1.0, 1, 1);
  CHECK(one.n_elems() == 1);
  CHECK(one.n_nodes() == 8);

  std::vector<int> cnt2 = {2, 1};
  SpatialMesh strip = build_spatial_box(2, ext, cnt2, 1);
  SpaceTimeMesh st = extrude_in_time(strip, 2.0, 2, 1);
  CHECK(st.n_elems() == 4);
  int gammaT = 0;
  for (const BoundaryFacet& f : st.facets)
    if (f.tag == StTag::GammaT) ++gammaT;
  CHECK(gammaT == 2);

  // node count = spatial nodes * (order*n_t + 1), both orders
  for (int order : {1, 2}) {
    std::vector<int> c = {3, 2};
    SpatialMesh sp = build_spatial_box(2, ext, c, order);
    for (int nt : {1, 3}) {
      SpaceTimeMesh m = extrude_in_time(sp, 1.0, nt, order);
      CHECK(m.n_nodes() == sp.n_nodes() * (order * nt + 1));
    }
  }
}

TEST_CASE("boundary classification and facet partition") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {3, 3, 3};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);

  double area0 = 0.0, areaT = 0.0;
  int n_gamma0 = 0, n_gammaT = 0, n_gammaS = 0;
  for (const BoundaryFacet& f : mesh.facets) {
    std::span<const int> nodes = mesh.elem_nodes(f.elem);
    std::vector<int> fn = element_face_nodes(mesh.dim, mesh.order, f.local_face);
    switch (f.tag) {
      case StTag::Gamma0:
        ++n_gamma0;
        for (int l : fn) CHECK(mesh.node(nodes[l])[2] == 0.0);
        area0 += facet_measure(mesh, f);
        break;
      case StTag::GammaT:
        ++n_gammaT;
        for (int l : fn) CHECK(mesh.node(nodes[l])[2] == 1.0);
        areaT += facet_measure(mesh, f);
        break;
      case StTag::GammaS: {
        ++n_gammaS;
        // constant-t? no: constant spatial coordinate on the fixed axis
        const int axis = f.local_face / 2;
        CHECK(axis < 2);
        const double v = mesh.node(nodes[fn[0]])[axis];
        CHECK((v == 0.0 || v == 1.0));
        for (int l : fn) CHECK(mesh.node(nodes[l])[axis] == v);
        break;
      }
    }
  }
  CHECK(n_gamma0 == 9);
  CHECK(n_gammaT == 9);
  CHECK(n_gammaS == 4 * 9);
  CHECK(area0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(areaT == doctest::Approx(1.0).epsilon(1e-12));

  // every exterior face carries exactly one tag
  std::map<std::pair<int, int>, int> tagged;
  for (const BoundaryFacet& f : mesh.facets) tagged[{f.elem, f.local_face}]++;
  for (const auto& [key, count] : tagged) CHECK(count == 1);
}

TEST_CASE("conformity: interior faces shared by exactly two elements") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 3, 2};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  auto faces = face_multiplicities(mesh);
  int exterior = 0;
  for (const auto& [key, count] : faces) {
    CHECK((count == 1 || count == 2));
    if (count == 1) ++exterior;
  }
  CHECK(exterior == static_cast<int>(mesh.facets.size()));
}

TEST_CASE("box volume equals |D| * T") {
  std::vector<double> ext = {1.5, 0.8, 2.0};
  std::vector<int> cnt = {3, 2, 4};
  std::vector<GradingSpec> gradings = {{0, GradingSpec::Kind::TanhCluster, 2.0}};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1, gradings);
  CHECK(mesh_volume(mesh) ==
        doctest::Approx(1.5 * 0.8 * 2.0).epsilon(1e-10));
}

TEST_CASE("tanh grading is strictly monotone and clusters at both walls") {
  GradingSpec g{0, GradingSpec::Kind::TanhCluster, 2.5};
  std::vector<double> x = graded_axis_coords(1.0, 16, 1, g);
  for (std::size_t i = 1; i < x.size(); ++i) CHECK(x[i] > x[i - 1]);
  CHECK(x.front() == 0.0);
  CHECK(x.back() == 1.0);
  const double first = x[1] - x[0];
  const double mid = x[8] - x[7];
  const double last = x[16] - x[15];
  CHECK(first < 0.5 * mid);
  CHECK(last < 0.5 * mid);
  CHECK(first == doctest::Approx(last).epsilon(1e-12));
}

TEST_CASE("cylinder channel mesh: tags, closed cylinder chain, Jacobians") {
  SpatialMesh mesh = build_cylinder_channel_mesh(2.2, 0.41, 0.1, {0.2, 0.2}, 0);
  CHECK(mesh.n_elems() > 100);

  // all quads positively oriented at quadrature points
  ReferenceElement ref = ReferenceElement::create(2, 1, 2);
  ElementWorkspace ws;
  double min_det = 1e300;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);  // throws on det <= 0
    for (int q = 0; q < ws.mapped.nq; ++q)
      min_det = std::min(min_det, ws.mapped.jxw[q] / ref.quadrature().weights[q]);
  }
  CHECK(min_det > 0.0);

  // cylinder boundary: every node appears in exactly two cylinder edges
  // (closed chain) and lies on the circle
  std::map<int, int> degree;
  int n_cyl = 0;
  for (const SpatialFacet& f : mesh.facets) {
    if (f.id != boundary_id::kCylinder) continue;
    ++n_cyl;
    std::span<const int> nodes = mesh.elem_nodes(f.elem);
    for (int l : element_face_nodes(2, 1, f.local_face)) {
      degree[nodes[l]]++;
      const double dx = mesh.node(nodes[l])[0] - 0.2;
      const double dy = mesh.node(nodes[l])[1] - 0.2;
      CHECK(std::hypot(dx, dy) == doctest::Approx(0.05).epsilon(1e-10));
    }
  }
  CHECK(n_cyl == 32);
  for (const auto& [node, deg] : degree) CHECK(deg == 2);

  // inlet/outlet/wall tags present
  int inlet = 0, outlet = 0, wall = 0;
  for (const SpatialFacet& f : mesh.facets) {
    inlet += f.id == boundary_id::kInlet;
    outlet += f.id == boundary_id::kOutlet;
    wall += f.id == boundary_id::kWall;
  }
  CHECK(inlet > 0);
  CHECK(outlet > 0);
  CHECK(wall > 0);
}

TEST_CASE("cylinder mesh refinement quadruples structured-block elements") {
  SpatialMesh m0 = build_cylinder_channel_mesh(2.2, 0.41, 0.1, {0.2, 0.2}, 0);
  SpatialMesh m1 = build_cylinder_channel_mesh(2.2, 0.41, 0.1, {0.2, 0.2}, 1);
  CHECK(m1.n_elems() == 4 * m0.n_elems());
}

TEST_CASE("cylinder mesh rejects circle touching the boundary") {
  CHECK_THROWS_AS((void)build_cylinder_channel_mesh(2.2, 0.41, 0.1, {0.2, 0.05}, 0),
                  std::invalid_argument);
}

TEST_CASE("text mesh format round-trip") {
  SpatialMesh quad = build_cylinder_channel_mesh(2.2, 0.41, 0.1, {0.2, 0.2}, 0);
  std::stringstream ss;
  write_mesh(ss, quad);
  SpatialMesh back = read_spatial_mesh(ss);
  CHECK(back.n_nodes() == quad.n_nodes());
  CHECK(back.n_elems() == quad.n_elems());
  CHECK(back.facets.size() == quad.facets.size());
  for (int n = 0; n < quad.n_nodes(); ++n)
    for (int a = 0; a < 2; ++a) CHECK(back.node(n)[a] == quad.node(n)[a]);
  CHECK(back.elems == quad.elems);

  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  SpaceTimeMesh st = build_box_mesh(3, ext, cnt, 2);
  std::stringstream ss2;
  write_mesh(ss2, st);
  SpaceTimeMesh st_back = read_spacetime_mesh(ss2);
  CHECK(st_back.n_nodes() == st.n_nodes());
  CHECK(st_back.elems == st.elems);
  CHECK(st_back.nodes_per_layer == st.nodes_per_layer);
  CHECK(st_back.layer_times == st.layer_times);
  REQUIRE(st_back.facets.size() == st.facets.size());
  for (std::size_t i = 0; i < st.facets.size(); ++i) {
    CHECK(st_back.facets[i].tag == st.facets[i].tag);
    CHECK(st_back.facets[i].boundary_id == st.facets[i].boundary_id);
  }
}

TEST_CASE("extrusion rejects bad input") {
  std::vector<double> ext = {1, 1};
  std::vector<int> cnt = {1, 1};
  SpatialMesh square = build_spatial_box(2, ext, cnt, 1);
  CHECK_THROWS_AS((void)extrude_in_time(square, -1.0, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)extrude_in_time(square, 1.0, 0, 1),
                  std::invalid_argument);
  SpatialMesh empty;
  empty.dim = 2;
  empty.order = 1;
  CHECK_THROWS_AS((void)extrude_in_time(empty, 1.0, 1, 1),
                  std::invalid_argument);
}
