import numpy as np
import pytest

from invfem.cases import Ball, Cube
from invfem.errors import InvalidConfigurationError, InvalidParameterError, MeshGenerationError, ResourceError
from invfem.geometry import build_big_tetra_decomposition
from invfem.meshing import (
    CUT,
    INSIDE,
    OUTSIDE,
    TetMesh,
    audit_grading,
    build_mesh_pair,
    check_conformity,
    grade_star,
    red_refine,
    refine_uniform,
    restrict_to_domain,
    sector_vertex_count,
    signed_volumes,
)

BIG_TET_VOLUME = 4.0**3 * 8.0 / (9.0 * np.sqrt(3.0))  # regular tetrahedron of circumradius 4


def regular_tet():
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


# -- uniform refinement ---------------------------------------------------

def test_level_zero_mesh(decomp):
    m = refine_uniform(decomp, 0)
    assert m.n_tets == 4 and m.n_vertices == 5


def test_level_one_has_32_tets(decomp):
    assert refine_uniform(decomp, 1).n_tets == 32


@pytest.mark.parametrize("L", [0, 1, 2, 3])
def test_sector_vertex_count_matches_enumeration(decomp, L):
    m = refine_uniform(decomp, L)
    for i in range(4):
        used = np.unique(m.tets[m.region == i])
        assert len(used) == sector_vertex_count(L)
    assert np.all(np.bincount(m.region) == 8**L)


def test_sector_vertex_count_formula():
    assert [sector_vertex_count(L) for L in range(4)] == [4, 10, 35, 165]


def test_level_above_maximum_rejected(decomp):
    with pytest.raises(InvalidParameterError):
        refine_uniform(decomp, 8)
    with pytest.raises(InvalidParameterError):
        refine_uniform(decomp, -1)


def test_vertex_budget_enforced(decomp):
    with pytest.raises(ResourceError):
        refine_uniform(decomp, 4, vertex_budget=1000)


def test_red_refine_preserves_volume_and_orientation():
    v = regular_tet()
    t = np.array([[0, 1, 2, 3]])
    v2, t2, _ = red_refine(v, t)
    vol = signed_volumes(v2, t2)
    assert len(t2) == 8 and np.all(vol > 0)
    assert vol.sum() == pytest.approx(abs(signed_volumes(v, t)[0]))


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_central_volume_conservation(pair_cache, L):
    m = pair_cache(L, 0.5)
    assert m.central.volumes.sum() == pytest.approx(BIG_TET_VOLUME, rel=1e-10)


# -- grading --------------------------------------------------------------

def test_mu_one_is_identity(pair_cache):
    m = pair_cache(1, 1.0)
    assert np.array_equal(m.star.vertices, m.central.vertices)


def test_grading_moves_half_radius_to_quarter(decomp, pair_cache):
    m = pair_cache(2, 0.5)
    r = decomp.radius(m.central.vertices)
    idx = np.flatnonzero(np.isclose(r, 0.5))
    assert len(idx) > 0
    rs = decomp.radius(m.star.vertices[idx])
    assert np.allclose(rs, 0.25)
    # along the same ray
    cos = np.einsum("ij,ij->i", m.star.vertices[idx], m.central.vertices[idx])
    cos /= np.linalg.norm(m.star.vertices[idx], axis=1) * np.linalg.norm(m.central.vertices[idx], axis=1)
    assert np.allclose(cos, 1.0)


def test_interface_and_origin_fixed(pair_cache):
    m = pair_cache(3, 0.5)
    assert np.array_equal(m.star.vertices[m.interface], m.central.vertices[m.interface])
    assert np.all(m.star.vertices[m.origin] == 0.0)
    assert np.sum(np.all(m.star.vertices == 0.0, axis=1)) == 1


@pytest.mark.parametrize("mu", [0.0, 1.5, -0.2])
def test_invalid_mu_rejected(decomp, mu):
    with pytest.raises(InvalidParameterError):
        grade_star(refine_uniform(decomp, 1), mu, decomp)


def test_inverted_element_reported(decomp):
    m = refine_uniform(decomp, 1)
    bad = TetMesh(m.vertices, m.tets[:, [0, 2, 1, 3]], m.region)
    with pytest.raises(MeshGenerationError) as exc:
        grade_star(bad, 0.5, decomp)
    assert exc.value.tet == 0


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("mu", [1.0, 0.7, 0.5])
def test_star_orientation_and_volume(pair_cache, L, mu):
    m = pair_cache(L, mu)
    assert np.all(m.central.volumes > 0) and np.all(m.star.volumes > 0)
    # the grading map fixes the boundary, so the total volume is unchanged
    total = m.star.volumes.sum()
    assert 0 < total <= BIG_TET_VOLUME * (1 + 1e-10)
    assert total == pytest.approx(BIG_TET_VOLUME, rel=1e-10)


@pytest.mark.parametrize("mu", [1.0, 0.7, 0.5])
def test_level_six_orientation(decomp, mu):
    central = refine_uniform(decomp, 6)
    star = grade_star(central, mu, decomp)
    assert np.all(star.volumes > 0)


def test_grading_law_quarter_per_level(decomp, pair_cache):
    mins = []
    for L in range(1, 6):
        m = pair_cache(L, 0.5)
        r = decomp.radius(m.star.vertices)
        mins.append(r[r > 0].min())
    ratios = np.array(mins[:-1]) / np.array(mins[1:])
    assert np.all((ratios >= 3.5) & (ratios <= 4.5))


def test_every_star_tet_in_one_sector(decomp, pair_cache):
    m = pair_cache(3, 0.5)
    centroids = m.star.vertices[m.star.tets].mean(axis=1)
    assert np.array_equal(decomp.sector_of(centroids), m.star.region)


# -- pair and conformity --------------------------------------------------

def test_pair_level_one_mu_one_geometry_identical(pair_cache):
    m = pair_cache(1, 1.0)
    assert np.allclose(m.central.vertices[m.central.tets], m.star.vertices[m.star.tets])


@pytest.mark.parametrize("L", [0, 2, 4])
def test_interface_face_sets_equal(pair_cache, L):
    m = pair_cache(L, 0.5)
    fc = {tuple(f) for f in m.central.boundary_faces}
    fs = {tuple(f) for f in m.star.boundary_faces}
    assert fc == fs
    assert set(np.unique(m.central.boundary_faces)) == set(m.interface)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
def test_conformity_face_hash(decomp, pair_cache, L):
    m = pair_cache(L, 0.5)
    faces, counts = m.central.face_counts()
    assert set(np.unique(counts)) <= {1, 2}
    assert check_conformity(m.central, decomp)
    assert check_conformity(m.star)


def test_conformity_detects_duplicate_element(pair_cache):
    m = pair_cache(1, 1.0).central
    dup = TetMesh(m.vertices, np.vstack([m.tets, m.tets[:1]]), np.append(m.region, m.region[0]))
    assert not check_conformity(dup)


def test_mesh_size_is_max_over_both(pair_cache):
    m = pair_cache(3, 0.5)
    assert m.h == max(m.central.diameters.max(), m.star.diameters.max())


# -- audit ----------------------------------------------------------------

def test_regular_tet_shape_ratio():
    m = TetMesh(regular_tet(), np.array([[0, 1, 2, 3]]), np.zeros(1, dtype=int))
    assert (m.diameters / m.inscribed_diameters)[0] == pytest.approx(np.sqrt(24) / 2)


def test_audit_mu_one_c1_at_most_one(pair_cache):
    a = audit_grading(pair_cache(3, 1.0))
    assert a.c1_star <= 1.0 + 1e-12


def test_audit_level_three_min_distance_scales_like_h_squared(pair_cache):
    a = audit_grading(pair_cache(3, 0.5))
    assert a.c3_star > 0.0
    assert a.conforming


def test_audit_c1_bounded_across_levels(pair_cache):
    c1 = [audit_grading(pair_cache(L, 0.5)).c1_star for L in range(2, 6)]
    assert max(c1) / min(c1) < 3.0


def test_shape_regularity_constant_reported(pair_cache):
    a = audit_grading(pair_cache(2, 0.5))
    assert np.isfinite(a.c0) and a.c0 >= np.sqrt(6) - 1e-12
    assert set(a.as_dict()) >= {"c0", "c1_star", "c2_star", "c3_star", "h"}


# -- restriction to the magnetic body ------------------------------------

def _single(points):
    return TetMesh(np.asarray(points, dtype=float), np.array([[0, 1, 2, 3]]), np.zeros(1, dtype=int))


def test_far_element_outside_ball():
    m = _single(np.array([[2, 0, 0], [2.1, 0, 0], [2, 0.1, 0], [2, 0, 0.1]]))
    assert restrict_to_domain(m, Ball(0.5))[0] == OUTSIDE


def test_origin_element_inside_ball():
    m = _single(0.05 * regular_tet())
    assert restrict_to_domain(m, Ball(0.5))[0] == INSIDE


def test_straddling_element_cut():
    m = _single(np.array([[0.4, 0, 0], [0.6, 0, 0], [0.5, 0.1, 0], [0.5, 0, 0.1]]))
    assert restrict_to_domain(m, Ball(0.5))[0] == CUT


def test_element_with_outside_vertices_crossing_ball_is_cut():
    # all vertices outside, but the element slices through the ball
    m = _single(np.array([[-1, -1, 0.4], [1, -1, 0.4], [0, 1.5, 0.4], [0, 0, 1.2]]))
    assert restrict_to_domain(m, Ball(0.5))[0] == CUT


def test_domain_larger_than_central_zone_rejected(decomp, pair_cache):
    with pytest.raises(InvalidConfigurationError):
        restrict_to_domain(pair_cache(1, 0.5).central, Ball(2.0), decomp)


def test_cube_classification_counts(decomp, pair_cache):
    m = pair_cache(3, 0.5).central
    cls = restrict_to_domain(m, Cube(1.0), decomp)
    vol_in = m.volumes[cls == INSIDE].sum()
    vol_cut = m.volumes[cls == CUT].sum()
    assert vol_in <= 1.0 <= vol_in + vol_cut
