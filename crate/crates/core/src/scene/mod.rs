//! Triangle-mesh rooms with per-surface materials and ray queries.

mod bvh;
mod material;
mod obj;
mod vec3;

use std::path::Path;

pub use bvh::{Aabb, Bvh, MAX_LEAF};
pub use material::{
    BandArray, BandCoefficients, Material, MaterialTable, BANDS, BAND_CENTERS_HZ,
    DEFAULT_MATERIAL,
};
pub use obj::{parse_obj, ObjMesh};
pub use vec3::Vec3;

use crate::error::{Error, Result};

/// Hits closer than this to the ray origin are ignored, and bounced rays are
/// offset by this distance along the surface normal.
pub const RAY_EPSILON: f64 = 1e-6;

pub const DEFAULT_WALKABLE_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surface {
    pub vertices: [usize; 3],
    pub material: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub surface: usize,
    /// Unit geometric normal, facing back toward the ray origin.
    pub normal: Vec3,
}

#[derive(Debug, Clone, Copy)]
struct Triangle {
    a: Vec3,
    e1: Vec3,
    e2: Vec3,
    normal: Vec3,
}

impl Triangle {
    fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let e1 = b - a;
        let e2 = c - a;
        let normal = e1.cross(e2).normalized().unwrap_or(Vec3::ZERO);
        Triangle { a, e1, e2, normal }
    }

    /// Two-sided Möller–Trumbore; returns the hit distance along `dir`.
    #[inline]
    fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let p = dir.cross(self.e2);
        let det = self.e1.dot(p);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv_det = 1.0 / det;
        let s = origin - self.a;
        let u = s.dot(p) * inv_det;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(self.e1);
        let v = dir.dot(q) * inv_det;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some(self.e2.dot(q) * inv_det)
    }

    fn vertices(&self) -> [Vec3; 3] {
        [self.a, self.a + self.e1, self.a + self.e2]
    }
}

/// An immutable acoustic scene. Safe to query from many threads.
#[derive(Debug, Clone)]
pub struct Scene {
    vertices: Vec<Vec3>,
    surfaces: Vec<Surface>,
    materials: MaterialTable,
    triangles: Vec<Triangle>,
    bvh: Bvh,
    walkable_height: f64,
}

impl Scene {
    pub fn new(
        vertices: Vec<Vec3>,
        surfaces: Vec<Surface>,
        materials: MaterialTable,
        walkable_height: f64,
    ) -> Result<Scene> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("vertex {i} is not finite")));
        }
        if !walkable_height.is_finite() {
            return Err(Error::Validation("walkable height is not finite".into()));
        }
        materials.validate()?;
        let mut triangles = Vec::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            if let Some(&v) = s.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Validation(format!(
                    "surface {i} references vertex {v}, only {} exist",
                    vertices.len()
                )));
            }
            if s.material >= materials.len() {
                return Err(Error::Validation(format!(
                    "surface {i} references unknown material id {}",
                    s.material
                )));
            }
            let [a, b, c] = s.vertices.map(|v| vertices[v]);
            let area2 = (b - a).cross(c - a).length();
            if area2 <= 1e-12 {
                return Err(Error::Validation(format!("surface {i} has zero area")));
            }
            triangles.push(Triangle::new(a, b, c));
        }
        let bounds: Vec<Aabb> = triangles
            .iter()
            .map(|t| Aabb::from_points(&t.vertices()))
            .collect();
        let bvh = Bvh::build(&bounds);
        Ok(Scene {
            vertices,
            surfaces,
            materials,
            triangles,
            bvh,
            walkable_height,
        })
    }

    /// Loads an OBJ mesh and binds its surfaces to materials from a JSON table.
    pub fn load(mesh_path: &Path, materials_path: &Path) -> Result<Scene> {
        let materials = MaterialTable::load(materials_path)?;
        let text = std::fs::read_to_string(mesh_path).map_err(|e| Error::io(mesh_path, e))?;
        let mesh = parse_obj(&text, &mesh_path.display().to_string())?;
        mesh.into_scene(materials, DEFAULT_WALKABLE_HEIGHT)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn materials(&self) -> &MaterialTable {
        &self.materials
    }

    pub fn walkable_height(&self) -> f64 {
        self.walkable_height
    }

    pub fn with_walkable_height(mut self, height: f64) -> Scene {
        self.walkable_height = height;
        self
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn bounds(&self) -> Aabb {
        self.bvh.bounds()
    }

    pub fn surface_coefficients(&self, surface: usize) -> &BandCoefficients {
        let id = self.surfaces[surface].material;
        &self.materials.get(id).expect("validated material id").coefficients
    }

    /// Unit normal following the vertex winding of `surface`.
    pub fn surface_normal(&self, surface: usize) -> Vec3 {
        self.triangles[surface].normal
    }

    /// Nearest surface hit along a unit-length ray within `(RAY_EPSILON, t_max)`.
    pub fn ray_intersect(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<Hit> {
        debug_assert!((dir.length() - 1.0).abs() < 1e-9, "direction must be unit");
        let mut best: Option<(f64, usize)> = None;
        self.bvh.traverse(origin, dir, t_max, |prim, cutoff| {
            if let Some(t) = self.triangles[prim].intersect(origin, dir) {
                if t > RAY_EPSILON && t < t_max {
                    let better = match best {
                        None => true,
                        Some((bt, bi)) => t < bt || (t == bt && prim < bi),
                    };
                    if better {
                        best = Some((t, prim));
                        *cutoff = t;
                    }
                }
            }
        });
        best.map(|(distance, surface)| self.make_hit(distance, surface, dir))
    }

    /// Every distinct surface crossing along the open segment `a → b`,
    /// as `(distance from a, surface)` sorted by distance.
    pub fn segment_crossings(&self, a: Vec3, b: Vec3) -> Vec<(f64, usize)> {
        let delta = b - a;
        let len = delta.length();
        let Some(dir) = delta.normalized() else {
            return Vec::new();
        };
        let mut hits = Vec::new();
        self.bvh.traverse(a, dir, len, |prim, _| {
            if let Some(t) = self.triangles[prim].intersect(a, dir) {
                if t > RAY_EPSILON && t < len - RAY_EPSILON {
                    hits.push((t, prim));
                }
            }
        });
        hits.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        // Triangles sharing an edge report the same crossing twice; keep one
        // surface per cluster of coincident distances.
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(hits.len());
        for (t, s) in hits {
            match merged.last_mut() {
                Some(last) if t - last.0 <= 1e-9 => last.1 = last.1.min(s),
                _ => merged.push((t, s)),
            }
        }
        merged
    }

    /// Per-band product of the transmission coefficients of every surface the
    /// segment `a → b` crosses. All ones when unobstructed.
    pub fn occlusion_factor(&self, a: Vec3, b: Vec3) -> BandArray {
        let mut ids: Vec<usize> = self
            .segment_crossings(a, b)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        // Fixed multiplication order makes the result exactly symmetric in a, b.
        ids.sort_unstable();
        let mut factor = [1.0; BANDS];
        for s in ids {
            let tau = self.surface_coefficients(s).transmission;
            for (f, t) in factor.iter_mut().zip(tau) {
                *f *= t;
            }
        }
        factor
    }

    /// True when no surface crosses the open segment `a → b`.
    pub fn line_of_sight(&self, a: Vec3, b: Vec3) -> bool {
        let delta = b - a;
        let len = delta.length();
        let Some(dir) = delta.normalized() else {
            return true;
        };
        self.ray_intersect(a, dir, len - RAY_EPSILON).is_none()
    }

    /// True when some triangle overlaps the box.
    pub fn box_overlaps_surface(&self, query: &Aabb) -> bool {
        self.bvh.any_in_box(query, |prim| {
            triangle_overlaps_box(&self.triangles[prim].vertices(), query)
        })
    }

    fn make_hit(&self, distance: f64, surface: usize, dir: Vec3) -> Hit {
        let n = self.triangles[surface].normal;
        let normal = if n.dot(dir) > 0.0 { -n } else { n };
        Hit {
            distance,
            surface,
            normal,
        }
    }
}

/// Separating-axis triangle/box overlap test.
pub fn triangle_overlaps_box(tri: &[Vec3; 3], b: &Aabb) -> bool {
    let c = b.center();
    let h = b.extent() * 0.5;
    let v = tri.map(|p| p - c);
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let axes_unit = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let separated = |axis: Vec3| -> bool {
        let p = v.map(|x| x.dot(axis));
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        let lo = p[0].min(p[1]).min(p[2]);
        let hi = p[0].max(p[1]).max(p[2]);
        lo > r || hi < -r
    };
    for u in axes_unit {
        for edge in e {
            let axis = u.cross(edge);
            if axis.length_squared() > 1e-24 && separated(axis) {
                return false;
            }
        }
    }
    for u in axes_unit {
        if separated(u) {
            return false;
        }
    }
    let normal = e[0].cross(e[1]);
    !(normal.length_squared() > 0.0 && separated(normal))
}

/// Incremental mesh construction for programmatic scenes.
#[derive(Debug, Clone, Default)]
pub struct MeshBuilder {
    vertices: Vec<Vec3>,
    surfaces: Vec<Surface>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_triangle(&mut self, a: Vec3, b: Vec3, c: Vec3, material: usize) -> &mut Self {
        let base = self.vertices.len();
        self.vertices.extend([a, b, c]);
        self.surfaces.push(Surface {
            vertices: [base, base + 1, base + 2],
            material,
        });
        self
    }

    /// Planar quad `a b c d` split along the `a–c` diagonal.
    pub fn add_quad(&mut self, a: Vec3, b: Vec3, c: Vec3, d: Vec3, material: usize) -> &mut Self {
        let base = self.vertices.len();
        self.vertices.extend([a, b, c, d]);
        self.surfaces.push(Surface {
            vertices: [base, base + 1, base + 2],
            material,
        });
        self.surfaces.push(Surface {
            vertices: [base, base + 2, base + 3],
            material,
        });
        self
    }

    /// Closed axis-aligned box with inward-facing normals (12 triangles).
    pub fn add_box(&mut self, min: Vec3, max: Vec3, material: usize) -> &mut Self {
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let (x0, y0, z0) = (min.x, min.y, min.z);
        let (x1, y1, z1) = (max.x, max.y, max.z);
        self.add_quad(p(x0, y0, z0), p(x0, y1, z0), p(x0, y1, z1), p(x0, y0, z1), material);
        self.add_quad(p(x1, y0, z0), p(x1, y0, z1), p(x1, y1, z1), p(x1, y1, z0), material);
        self.add_quad(p(x0, y0, z0), p(x0, y0, z1), p(x1, y0, z1), p(x1, y0, z0), material);
        self.add_quad(p(x0, y1, z0), p(x1, y1, z0), p(x1, y1, z1), p(x0, y1, z1), material);
        self.add_quad(p(x0, y0, z0), p(x1, y0, z0), p(x1, y1, z0), p(x0, y1, z0), material);
        self.add_quad(p(x0, y0, z1), p(x0, y1, z1), p(x1, y1, z1), p(x1, y0, z1), material);
        self
    }

    /// Axis-aligned rectangle perpendicular to `axis` at `offset`, spanning
    /// `[lo, hi]` in the other two axes.
    pub fn add_panel(
        &mut self,
        axis: usize,
        offset: f64,
        lo: [f64; 2],
        hi: [f64; 2],
        material: usize,
    ) -> &mut Self {
        let corner = |u: f64, v: f64| match axis {
            0 => Vec3::new(offset, u, v),
            1 => Vec3::new(u, offset, v),
            _ => Vec3::new(u, v, offset),
        };
        self.add_quad(
            corner(lo[0], lo[1]),
            corner(hi[0], lo[1]),
            corner(hi[0], hi[1]),
            corner(lo[0], hi[1]),
            material,
        )
    }

    pub fn build(self, materials: MaterialTable, walkable_height: f64) -> Result<Scene> {
        Scene::new(self.vertices, self.surfaces, materials, walkable_height)
    }
}

/// Axis-aligned room `[0, dims]` with one material on every wall.
pub fn shoebox(dims: Vec3, walls: BandCoefficients) -> Result<Scene> {
    if dims.x <= 0.0 || dims.y <= 0.0 || dims.z <= 0.0 {
        return Err(Error::Validation(format!("degenerate room dimensions {dims:?}")));
    }
    let mut b = MeshBuilder::new();
    b.add_box(Vec3::ZERO, dims, 0);
    b.build(MaterialTable::new(walls), DEFAULT_WALKABLE_HEIGHT.min(dims.y * 0.5))
}
