//! Regular triangle lattice anchored at pixel centers.
//!
//! Every pixel center carries one vertex; each unit cell between four
//! neighboring vertices is split along its lower-left to upper-right
//! diagonal into two triangles. Displacing the vertices by a flow field and
//! re-rasterizing yields the forward warp in [`crate::mesh_warp`].

use crate::error::{Error, Result};
use crate::Float;

/// Triangles whose `|signed area|` falls below this are treated as
/// degenerate and never claim any pixel.
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

/// Slack on barycentric coordinates in the containment test. Keeps points
/// that land exactly on a shared edge from being dropped by both neighbors
/// due to rounding; double claims are resolved by triangle index.
const INSIDE_EPS: f64 = 1e-9;

/// Vertex grid plus triangle index triples.
///
/// Vertex `k` of pixel `(x, y)` (with `k = y * width + x`) sits at
/// continuous position `(x, y)`. Triangles of the cell with lower-left
/// vertex `(x, y)` are numbered `2 * (y * (width-1) + x)` (lower triangle,
/// below the diagonal) and that plus one (upper triangle). Both wind
/// counterclockwise in (x right, y up) orientation, so the unwarped signed
/// area is `+0.5` everywhere.
#[derive(Debug, Clone)]
pub struct TriangleLattice {
    width: usize,
    height: usize,
    triangles: Vec<[u32; 3]>,
}

impl TriangleLattice {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn triangle(&self, index: usize) -> [u32; 3] {
        self.triangles[index]
    }

    /// Grid coordinates of vertex `k`.
    #[inline]
    pub fn vertex_pixel(&self, vertex: u32) -> (usize, usize) {
        let v = vertex as usize;
        (v % self.width, v / self.width)
    }

    /// Unwarped continuous position of vertex `k` (equals its pixel center).
    #[inline]
    pub fn vertex_position(&self, vertex: u32) -> (f64, f64) {
        let (x, y) = self.vertex_pixel(vertex);
        (x as f64, y as f64)
    }
}

/// Builds the lattice for a `width x height` image.
///
/// Needs at least a 2x2 grid to form any cell.
pub fn build_lattice(width: usize, height: usize) -> Result<TriangleLattice> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidDimension {
            width,
            height,
            min: 2,
        });
    }
    let w = width as u32;
    let mut triangles = Vec::with_capacity(2 * (width - 1) * (height - 1));
    for cy in 0..height as u32 - 1 {
        for cx in 0..w - 1 {
            let v00 = cy * w + cx;
            let v10 = v00 + 1;
            let v01 = v00 + w;
            let v11 = v01 + 1;
            // Diagonal runs v00 -> v11; lower triangle first.
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Ok(TriangleLattice {
        width,
        height,
        triangles,
    })
}

/// Winning surface sample for one output pixel after rasterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment<T: Float> {
    /// Output pixel this fragment landed on.
    pub pixel: (usize, usize),
    /// Index into [`TriangleLattice::triangles`].
    pub triangle_id: usize,
    /// Barycentric weights for the triangle's three vertices. They sum to 1;
    /// each is at least `-1e-6` (tiny negatives come from the edge slack).
    pub barycentric: [T; 3],
    /// Mean displacement magnitude of the triangle's vertices, used for
    /// front-to-back resolution.
    pub motion_magnitude: T,
}

#[inline]
fn cross<T: Float>(ax: T, ay: T, bx: T, by: T) -> T {
    ax * by - ay * bx
}

/// Twice the signed area of triangle `(a, b, c)`.
#[inline]
pub(crate) fn signed_area_x2<T: Float>(a: (T, T), b: (T, T), c: (T, T)) -> T {
    cross(b.0 - a.0, b.1 - a.1, c.0 - a.0, c.1 - a.1)
}

/// Barycentric containment test against triangle `(a, b, c)`.
///
/// Returns the weights `(w0, w1, w2)` of `p` with respect to the three
/// vertices when `p` lies inside or on the triangle, `None` otherwise.
/// Either winding is accepted. A degenerate (near-zero area) triangle
/// contains nothing. Points exactly on an edge are accepted by both
/// adjacent triangles; callers resolve ownership by preferring the lower
/// triangle index.
pub fn point_in_triangle<T: Float>(
    p: (T, T),
    a: (T, T),
    b: (T, T),
    c: (T, T),
) -> Option<(T, T, T)> {
    let area = signed_area_x2(a, b, c);
    if area.abs() < crate::flt(DEGENERATE_AREA_EPS) {
        return None;
    }
    // Edge functions opposite each vertex; wi = ei / area. w2 closes the
    // partition of unity exactly.
    let e0 = cross(c.0 - b.0, c.1 - b.1, p.0 - b.0, p.1 - b.1);
    let e1 = cross(a.0 - c.0, a.1 - c.1, p.0 - c.0, p.1 - c.1);
    let w0 = e0 / area;
    let w1 = e1 / area;
    let w2 = T::one() - w0 - w1;
    let eps = crate::flt::<T>(-INSIDE_EPS);
    if w0 >= eps && w1 >= eps && w2 >= eps {
        Some((w0, w1, w2))
    } else {
        None
    }
}

/// Partial derivatives of the barycentric weights with respect to the six
/// vertex coordinates, for a fixed query point `p`.
///
/// Returns `d[w][v]` where `w` indexes the weight (0..3) and `v` the vertex
/// coordinate in order `ax, ay, bx, by, cx, cy`. Only meaningful when the
/// triangle is non-degenerate; the caller must have resolved containment
/// already (the expression is the derivative of the same rational form the
/// forward pass evaluates, with `w2 = 1 - w0 - w1`).
pub(crate) fn barycentric_jacobian<T: Float>(
    p: (T, T),
    a: (T, T),
    b: (T, T),
    c: (T, T),
) -> [[T; 6]; 3] {
    let area = signed_area_x2(a, b, c);
    let e0 = cross(c.0 - b.0, c.1 - b.1, p.0 - b.0, p.1 - b.1);
    let e1 = cross(a.0 - c.0, a.1 - c.1, p.0 - c.0, p.1 - c.1);
    let w0 = e0 / area;
    let w1 = e1 / area;

    // d/du and d/dv of e(u, v; p) = (v - u) x (p - u).
    // de/dux = vy - py, de/duy = px - vx, de/dvx = py - uy, de/dvy = ux - px.
    let zero = T::zero();

    // e0: u = b, v = c.
    let de0 = [
        zero,
        zero,
        c.1 - p.1,
        p.0 - c.0,
        p.1 - b.1,
        b.0 - p.0,
    ];
    // e1: u = c, v = a.
    let de1 = [
        p.1 - c.1,
        c.0 - p.0,
        zero,
        zero,
        a.1 - p.1,
        p.0 - a.0,
    ];
    // area = e(a, b; c): u = a, v = b, "p" = c.
    let darea = [
        b.1 - c.1,
        c.0 - b.0,
        c.1 - a.1,
        a.0 - c.0,
        a.1 - b.1,
        b.0 - a.0,
    ];

    let mut jac = [[zero; 6]; 3];
    for k in 0..6 {
        let dw0 = (de0[k] - w0 * darea[k]) / area;
        let dw1 = (de1[k] - w1 * darea[k]) / area;
        jac[0][k] = dw0;
        jac[1][k] = dw1;
        jac[2][k] = -dw0 - dw1;
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_counts() {
        let l = build_lattice(3, 3).unwrap();
        assert_eq!(l.vertex_count(), 9);
        assert_eq!(l.triangle_count(), 8);

        let l = build_lattice(2, 2).unwrap();
        assert_eq!(l.triangle_count(), 2);

        let l = build_lattice(4, 3).unwrap();
        assert_eq!(l.triangle_count(), 12);
    }

    #[test]
    fn lattice_rejects_degenerate_grids() {
        assert!(matches!(
            build_lattice(1, 5),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            build_lattice(5, 1),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            build_lattice(0, 0),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn unwarped_triangles_have_consistent_positive_area() {
        let l = build_lattice(5, 4).unwrap();
        for t in l.triangles() {
            let a = l.vertex_position(t[0]);
            let b = l.vertex_position(t[1]);
            let c = l.vertex_position(t[2]);
            // Unit cell halves: twice the signed area is exactly 1.
            assert_eq!(signed_area_x2(a, b, c), 1.0);
        }
    }

    #[test]
    fn containment_at_vertex_and_centroid() {
        let a = (0.0f64, 0.0);
        let b = (1.0, 0.0);
        let c = (0.0, 1.0);
        let (w0, w1, w2) = point_in_triangle(a, a, b, c).unwrap();
        assert_eq!((w0, w1, w2), (1.0, 0.0, 0.0));

        let centroid = ((a.0 + b.0 + c.0) / 3.0, (a.1 + b.1 + c.1) / 3.0);
        let (w0, w1, w2) = point_in_triangle(centroid, a, b, c).unwrap();
        assert!((w0 - 1.0 / 3.0).abs() < 1e-12);
        assert!((w1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((w2 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn containment_interior_point_weights() {
        // Hand-solved: sub-triangle areas opposite each vertex are
        // 0.25, 0.125, 0.125 of a 0.5-area triangle.
        let w = point_in_triangle((0.25f64, 0.25), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)).unwrap();
        assert_eq!(w, (0.5, 0.25, 0.25));
    }

    #[test]
    fn containment_rejects_outside_and_degenerate() {
        let a = (0.0f64, 0.0);
        let b = (1.0, 0.0);
        let c = (0.0, 1.0);
        assert!(point_in_triangle((0.75, 0.75), a, b, c).is_none());
        assert!(point_in_triangle((-0.1, 0.5), a, b, c).is_none());
        // Collinear vertices: degenerate, contains nothing, even its own vertex.
        assert!(point_in_triangle((0.5, 0.5), (0.0, 0.0), (0.5, 0.5), (1.0, 1.0)).is_none());
    }

    #[test]
    fn containment_accepts_either_winding() {
        // Clockwise copy of the same triangle.
        let w = point_in_triangle((0.25f64, 0.25), (0.0, 0.0), (0.0, 1.0), (1.0, 0.0)).unwrap();
        assert_eq!(w, (0.5, 0.25, 0.25));
    }

    #[test]
    fn barycentric_weights_partition_unity_on_random_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0usize;
        for _ in 0..2000 {
            let tri: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let p = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if let Some((w0, w1, w2)) = point_in_triangle(p, tri[0], tri[1], tri[2]) {
                hits += 1;
                assert!((w0 + w1 + w2 - 1.0).abs() < 1e-6);
                assert!(w0 >= -1e-6 && w1 >= -1e-6 && w2 >= -1e-6);
                // Weights reproduce the point.
                let rx = w0 * tri[0].0 + w1 * tri[1].0 + w2 * tri[2].0;
                let ry = w0 * tri[0].1 + w1 * tri[1].1 + w2 * tri[2].1;
                assert!((rx - p.0).abs() < 1e-9 && (ry - p.1).abs() < 1e-9);
            }
        }
        assert!(hits > 100, "sampling produced too few interior points");
    }

    #[test]
    fn interior_pixel_centers_covered_exactly_once_with_lower_index_ownership() {
        for (w, h) in [(2usize, 2usize), (3, 3), (5, 4), (7, 3)] {
            let l = build_lattice(w, h).unwrap();
            for py in 0..h {
                for px in 0..w {
                    let p = (px as f64, py as f64);
                    let claims: Vec<usize> = (0..l.triangle_count())
                        .filter(|&t| {
                            let [i, j, k] = l.triangle(t);
                            point_in_triangle(
                                p,
                                l.vertex_position(i),
                                l.vertex_position(j),
                                l.vertex_position(k),
                            )
                            .is_some()
                        })
                        .collect();
                    // Every pixel center lies on the lattice, so at least one
                    // triangle claims it; ownership by lowest index is unique.
                    assert!(
                        !claims.is_empty(),
                        "pixel ({px},{py}) uncovered on {w}x{h} lattice"
                    );
                    let owner = claims.iter().min().unwrap();
                    assert_eq!(claims.iter().filter(|&&t| t == *owner).count(), 1);
                }
            }
        }
    }

    #[test]
    fn barycentric_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut checked = 0usize;
        while checked < 50 {
            let mut v = [
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let p = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let area: f64 = signed_area_x2(v[0], v[1], v[2]);
            if area.abs() < 0.1 {
                continue;
            }
            let jac = barycentric_jacobian(p, v[0], v[1], v[2]);
            for coord in 0..6 {
                let (vi, axis) = (coord / 2, coord % 2);
                let read = |vs: &[(f64, f64); 3]| {
                    let a = signed_area_x2(vs[0], vs[1], vs[2]);
                    let e0 = signed_area_x2(vs[1], vs[2], p);
                    let e1 = signed_area_x2(vs[2], vs[0], p);
                    let w0 = e0 / a;
                    let w1 = e1 / a;
                    [w0, w1, 1.0 - w0 - w1]
                };
                let orig = v[vi];
                v[vi] = if axis == 0 {
                    (orig.0 + h, orig.1)
                } else {
                    (orig.0, orig.1 + h)
                };
                let plus = read(&v);
                v[vi] = if axis == 0 {
                    (orig.0 - h, orig.1)
                } else {
                    (orig.0, orig.1 - h)
                };
                let minus = read(&v);
                v[vi] = orig;
                for wi in 0..3 {
                    let fd = (plus[wi] - minus[wi]) / (2.0 * h);
                    assert!(
                        (jac[wi][coord] - fd).abs() < 1e-5,
                        "d w{wi} / d coord{coord}: analytic {} vs fd {fd}",
                        jac[wi][coord]
                    );
                }
            }
            checked += 1;
        }
    }
}
