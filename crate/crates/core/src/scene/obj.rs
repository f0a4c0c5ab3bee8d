//! Minimal Wavefront OBJ reader: `v`, `f`, `usemtl` and `g` records.
//!
//! Faces with more than three vertices are fan-split around their first
//! vertex. A face is bound to the last `usemtl` name in effect; failing that,
//! to its group name when the material table knows it; failing that, to
//! `"default"`. Other record types are ignored.

use super::material::MaterialTable;
use super::vec3::Vec3;
use super::{Scene, Surface};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ObjFace {
    pub vertices: Vec<usize>,
    pub material: Option<String>,
    pub group: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub path: String,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<ObjFace>,
}

pub fn parse_obj(text: &str, path: &str) -> Result<ObjMesh> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut material: Option<String> = None;
    let mut group: Option<String> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let coords: Vec<f64> = tokens
                    .by_ref()
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_err(line_no, format!("bad coordinate {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(parse_err(line_no, "vertex needs 3 coordinates".into()));
                }
                let v = Vec3::new(coords[0], coords[1], coords[2]);
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "{path}:{line_no}: non-finite vertex"
                    )));
                }
                vertices.push(v);
            }
            "f" => {
                let mut idx = Vec::new();
                for t in tokens {
                    let first = t.split('/').next().unwrap_or("");
                    let n: i64 = first
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad face index {t:?}")))?;
                    let resolved = if n > 0 {
                        n - 1
                    } else if n < 0 {
                        vertices.len() as i64 + n
                    } else {
                        return Err(parse_err(line_no, "face index 0 is invalid".into()));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            line_no,
                            format!("face index {n} out of range ({} vertices)", vertices.len()),
                        ));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 vertices".into()));
                }
                faces.push(ObjFace {
                    vertices: idx,
                    material: material.clone(),
                    group: group.clone(),
                    line: line_no,
                });
            }
            "usemtl" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                if name.is_empty() {
                    return Err(parse_err(line_no, "usemtl without a name".into()));
                }
                material = Some(name);
            }
            "g" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                group = (!name.is_empty()).then_some(name);
            }
            _ => {}
        }
    }

    Ok(ObjMesh {
        path: path.to_string(),
        vertices,
        faces,
    })
}

impl ObjMesh {
    /// Fan-triangulated surfaces with their resolved material ids.
    pub fn triangulate(&self, materials: &MaterialTable) -> Result<Vec<Surface>> {
        let mut surfaces = Vec::new();
        for face in &self.faces {
            let material = match (&face.material, &face.group) {
                (Some(name), _) => materials.id_of(name).ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: material {name:?} not defined in materials file",
                        self.path, face.line
                    ))
                })?,
                (None, Some(group)) => materials.id_of(group).unwrap_or(0),
                (None, None) => 0,
            };
            let first = face.vertices[0];
            for w in face.vertices[1..].windows(2) {
                surfaces.push(Surface {
                    vertices: [first, w[0], w[1]],
                    material,
                });
            }
        }
        Ok(surfaces)
    }

    pub fn into_scene(self, materials: MaterialTable, walkable_height: f64) -> Result<Scene> {
        let surfaces = self.triangulate(&materials)?;
        Scene::new(self.vertices, surfaces, materials, walkable_height)
    }
}
