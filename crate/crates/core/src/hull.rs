//! Incremental 3-D convex hull (quickhull flavour) with volume and
//! containment queries.

use std::collections::HashMap;

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate point set: all points are {0}")]
    Degenerate(&'static str),
    #[error("point {0} is not finite")]
    NonFinite(usize),
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Closed convex polyhedron with outward-facing triangles.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    points: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    planes: Vec<(Vector3<f64>, f64)>,
    eps: f64,
}

fn plane(points: &[Vector3<f64>], v: [usize; 3]) -> (Vector3<f64>, f64) {
    let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    let n = if len > 0.0 { n / len } else { n };
    (n, n.dot(&a))
}

impl ConvexHull {
    pub fn new(points: &[Vector3<f64>]) -> Result<Self, HullError> {
        if points.len() < 4 {
            return Err(HullError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(HullError::NonFinite(i));
        }
        let pts = points.to_vec();
        let scale = pts.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
        let eps = 1e-10 * scale;

        // Initial simplex: extreme pair, farthest from their line, farthest
        // from that plane.
        let mut i0 = 0;
        let mut i1 = 0;
        let mut best = -1.0;
        for axis in 0..3 {
            let (mut lo, mut hi) = (0, 0);
            for (i, p) in pts.iter().enumerate() {
                if p[axis] < pts[lo][axis] {
                    lo = i;
                }
                if p[axis] > pts[hi][axis] {
                    hi = i;
                }
            }
            let d = (pts[hi] - pts[lo]).norm();
            if d > best {
                best = d;
                i0 = lo;
                i1 = hi;
            }
        }
        if best <= eps {
            return Err(HullError::Degenerate("coincident"));
        }
        let dir = (pts[i1] - pts[i0]).normalize();
        let line_dist = |p: &Vector3<f64>| {
            let v = p - pts[i0];
            (v - dir * v.dot(&dir)).norm()
        };
        let i2 = (0..pts.len())
            .max_by(|&a, &b| line_dist(&pts[a]).total_cmp(&line_dist(&pts[b])))
            .unwrap();
        if line_dist(&pts[i2]) <= eps {
            return Err(HullError::Degenerate("collinear"));
        }
        let (n0, off0) = plane(&pts, [i0, i1, i2]);
        let i3 = (0..pts.len())
            .max_by(|&a, &b| {
                (n0.dot(&pts[a]) - off0)
                    .abs()
                    .total_cmp(&(n0.dot(&pts[b]) - off0).abs())
            })
            .unwrap();
        if (n0.dot(&pts[i3]) - off0).abs() <= eps {
            return Err(HullError::Degenerate("coplanar"));
        }

        let interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
        let mut faces: Vec<Face> = Vec::new();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let make_face = |v: [usize; 3], faces: &mut Vec<Face>, edges: &mut HashMap<(usize, usize), usize>| {
            let (mut n, mut off) = plane(&pts, v);
            let mut v = v;
            if n.dot(&interior) - off > 0.0 {
                v.swap(1, 2);
                n = -n;
                off = -off;
            }
            let id = faces.len();
            for k in 0..3 {
                edges.insert((v[k], v[(k + 1) % 3]), id);
            }
            faces.push(Face {
                v,
                normal: n,
                offset: off,
                outside: Vec::new(),
                alive: true,
            });
            id
        };
        for v in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
            make_face(v, &mut faces, &mut edges);
        }

        let assign = |candidates: &mut dyn Iterator<Item = usize>, new_faces: &[usize], faces: &mut Vec<Face>| {
            for p in candidates {
                for &f in new_faces {
                    if faces[f].distance(&pts[p]) > eps {
                        faces[f].outside.push(p);
                        break;
                    }
                }
            }
        };
        let simplex = [i0, i1, i2, i3];
        let initial: Vec<usize> = (0..4).collect();
        assign(
            &mut (0..pts.len()).filter(|i| !simplex.contains(i)),
            &initial,
            &mut faces,
        );

        let mut stack: Vec<usize> = initial;
        while let Some(fid) = stack.pop() {
            if !faces[fid].alive || faces[fid].outside.is_empty() {
                continue;
            }
            let apex = *faces[fid]
                .outside
                .iter()
                .max_by(|&&a, &&b| faces[fid].distance(&pts[a]).total_cmp(&faces[fid].distance(&pts[b])))
                .unwrap();
            let eye = pts[apex];

            // Flood the set of faces visible from the apex.
            let mut visible = vec![fid];
            let mut seen = std::collections::HashSet::from([fid]);
            let mut k = 0;
            while k < visible.len() {
                let f = visible[k];
                k += 1;
                let v = faces[f].v;
                for e in 0..3 {
                    if let Some(&nb) = edges.get(&(v[(e + 1) % 3], v[e])) {
                        if faces[nb].alive && !seen.contains(&nb) && faces[nb].distance(&eye) > eps {
                            seen.insert(nb);
                            visible.push(nb);
                        }
                    }
                }
            }

            let mut horizon = Vec::new();
            for &f in &visible {
                let v = faces[f].v;
                for e in 0..3 {
                    let (a, b) = (v[e], v[(e + 1) % 3]);
                    match edges.get(&(b, a)) {
                        Some(nb) if seen.contains(nb) => {}
                        _ => horizon.push((a, b)),
                    }
                }
            }

            let mut orphans = Vec::new();
            for &f in &visible {
                faces[f].alive = false;
                orphans.append(&mut faces[f].outside);
                let v = faces[f].v;
                for e in 0..3 {
                    if edges.get(&(v[e], v[(e + 1) % 3])) == Some(&f) {
                        edges.remove(&(v[e], v[(e + 1) % 3]));
                    }
                }
            }

            let mut new_faces = Vec::with_capacity(horizon.len());
            for (a, b) in horizon {
                let v = [a, b, apex];
                let (n, off) = plane(&pts, v);
                let id = faces.len();
                for k in 0..3 {
                    edges.insert((v[k], v[(k + 1) % 3]), id);
                }
                faces.push(Face {
                    v,
                    normal: n,
                    offset: off,
                    outside: Vec::new(),
                    alive: true,
                });
                new_faces.push(id);
            }
            assign(
                &mut orphans.into_iter().filter(|&p| p != apex),
                &new_faces,
                &mut faces,
            );
            stack.extend(new_faces);
        }

        let alive: Vec<&Face> = faces.iter().filter(|f| f.alive).collect();
        Ok(Self {
            faces: alive.iter().map(|f| f.v).collect(),
            planes: alive.iter().map(|f| (f.normal, f.offset)).collect(),
            points: pts,
            eps,
        })
    }

    pub fn volume(&self) -> f64 {
        let origin = self.points[self.faces[0][0]];
        let six_v: f64 = self
            .faces
            .iter()
            .map(|f| {
                let a = self.points[f[0]] - origin;
                let b = self.points[f[1]] - origin;
                let c = self.points[f[2]] - origin;
                a.dot(&b.cross(&c))
            })
            .sum();
        six_v.abs() / 6.0
    }

    /// Inside or on the boundary, up to `tol` beyond it.
    pub fn contains(&self, p: &Vector3<f64>, tol: f64) -> bool {
        self.planes
            .iter()
            .all(|(n, off)| n.dot(p) - off <= tol.max(self.eps))
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_tetrahedron() {
        let pts = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let h = ConvexHull::new(&pts).unwrap();
        assert!((h.volume() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(h.face_count(), 4);
    }

    #[test]
    fn cube_with_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pts: Vec<_> = (0..8)
            .map(|i| Vector3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64) * 2.0)
            .collect();
        pts.extend((0..2000).map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 2.0));
        let h = ConvexHull::new(&pts).unwrap();
        assert!((h.volume() - 8.0).abs() < 1e-12);
        assert_eq!(h.vertex_indices().len(), 8);
        assert!(h.contains(&Vector3::new(1.0, 1.0, 1.0), 0.0));
        assert!(!h.contains(&Vector3::new(2.1, 1.0, 1.0), 1e-9));
    }

    #[test]
    fn sphere_volume_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..20000)
            .map(|_| {
                let v = Vector3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                );
                v.normalize()
            })
            .collect();
        let h = ConvexHull::new(&pts).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((h.volume() - exact).abs() / exact < 2e-3);
        for p in &pts {
            assert!(h.contains(p, 1e-9));
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat: Vec<_> = (0..10)
            .map(|i| Vector3::new(i as f64, (i * i) as f64, 0.0))
            .collect();
        assert_eq!(ConvexHull::new(&flat).unwrap_err(), HullError::Degenerate("coplanar"));
        let line: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(ConvexHull::new(&line).unwrap_err(), HullError::Degenerate("collinear"));
        assert_eq!(
            ConvexHull::new(&line[..3]).unwrap_err(),
            HullError::TooFewPoints(3)
        );
    }
}
