use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sonicforge::scene::{
    BandCoefficients, MaterialTable, MeshBuilder, Scene, Surface, Vec3, BANDS, RAY_EPSILON,
};

fn point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

fn random_soup(seed: u64, n: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::new();
    let mut surfaces = Vec::new();
    while surfaces.len() < n {
        let c = point(&mut rng, 4.0);
        let a = c + point(&mut rng, 1.0);
        let b = c + point(&mut rng, 1.0);
        let d = c + point(&mut rng, 1.0);
        if (b - a).cross(d - a).length() < 1e-2 {
            continue;
        }
        let base = vertices.len();
        vertices.extend([a, b, d]);
        surfaces.push(Surface {
            vertices: [base, base + 1, base + 2],
            material: 0,
        });
    }
    Scene::new(vertices, surfaces, MaterialTable::new(BandCoefficients::flat(0.3)), 1.5).unwrap()
}

/// Two-sided Möller–Trumbore, evaluated against every triangle.
fn brute_force(scene: &Scene, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, usize)> {
    let v = scene.vertices();
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in scene.surfaces().iter().enumerate() {
        let [a, b, c] = s.vertices.map(|k| v[k]);
        let e1 = b - a;
        let e2 = c - a;
        let p = d.cross(e2);
        let det = e1.dot(p);
        if det.abs() < 1e-12 {
            continue;
        }
        let inv = 1.0 / det;
        let tv = o - a;
        let u = tv.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = tv.cross(e1);
        let w = d.dot(q) * inv;
        if w < 0.0 || u + w > 1.0 {
            continue;
        }
        let t = e2.dot(q) * inv;
        if t > RAY_EPSILON && t < t_max && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, i));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ray_intersect_matches_exhaustive_search(seed in any::<u64>(), n in 20usize..=500) {
        let scene = random_soup(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..1250 {
            let o = point(&mut rng, 6.0);
            let Some(d) = point(&mut rng, 1.0).normalized() else { continue };
            let t_max = rng.random_range(1.0..20.0);
            let got = scene.ray_intersect(o, d, t_max).map(|h| (h.distance, h.surface));
            let want = brute_force(&scene, o, d, t_max);
            match (got, want) {
                (None, None) => {}
                (Some((t, s)), Some((u, r))) => {
                    prop_assert_eq!(s, r);
                    prop_assert!((t - u).abs() < 1e-6, "{} vs {}", t, u);
                }
                _ => prop_assert!(false, "ray {:?} {:?}: {:?} vs {:?}", o, d, got, want),
            }
        }
    }
}

fn material_table(taus: &[f64]) -> (MaterialTable, Vec<usize>) {
    let mut m = MaterialTable::new(BandCoefficients::flat(0.2));
    let ids = taus
        .iter()
        .enumerate()
        .map(|(i, &t)| m.insert(&format!("m{i}"), BandCoefficients::flat(0.0).with_transmission(t)))
        .collect();
    (m, ids)
}

/// Square of side `2·half` centered on `c`, facing `n`.
fn add_square(b: &mut MeshBuilder, c: Vec3, n: Vec3, half: f64, material: usize) {
    let helper = if n.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = n.cross(helper).normalized().unwrap() * half;
    let v = n.cross(u).normalized().unwrap() * half;
    b.add_quad(c - u - v, c + u - v, c + u + v, c - u + v, material);
}

fn room_point(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(0.5..9.5),
        rng.random_range(0.5..2.5),
        rng.random_range(0.5..9.5),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occlusion_is_symmetric(
        seed in any::<u64>(),
        taus in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (materials, ids) = material_table(&taus);
        let mut b = MeshBuilder::new();
        b.add_box(Vec3::ZERO, Vec3::new(10.0, 3.0, 10.0), 0);
        for &id in &ids {
            let axis = rng.random_range(0..3usize);
            let dims = [10.0, 3.0, 10.0];
            let others: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
            let off = rng.random_range(0.5..dims[axis] - 0.5);
            let lo = [rng.random_range(0.0..dims[others[0]] / 2.0), rng.random_range(0.0..dims[others[1]] / 2.0)];
            let hi = [lo[0] + rng.random_range(0.5..dims[others[0]] / 2.0), lo[1] + rng.random_range(0.5..dims[others[1]] / 2.0)];
            b.add_panel(axis, off, lo, hi, id);
        }
        let scene = b.build(materials, 1.5).unwrap();
        for _ in 0..20 {
            let (p, q) = (room_point(&mut rng), room_point(&mut rng));
            let f = scene.occlusion_factor(p, q);
            let g = scene.occlusion_factor(q, p);
            for k in 0..BANDS {
                prop_assert!((f[k] - g[k]).abs() <= 1e-12, "{:?} vs {:?}", f, g);
            }
        }
    }

    #[test]
    fn occlusion_never_grows_as_panels_are_added(
        seed in any::<u64>(),
        taus in prop::collection::vec(0.0f64..1.0, 1..6),
        opaque in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taus: Vec<f64> = if opaque { vec![0.0; taus.len()] } else { taus };
        let (materials, ids) = material_table(&taus);
        let (a, z) = (room_point(&mut rng), room_point(&mut rng));
        prop_assume!(a.distance(z) > 0.5);
        let dir = (z - a).normalized().unwrap();
        let mut b = MeshBuilder::new();
        b.add_box(Vec3::ZERO, Vec3::new(10.0, 3.0, 10.0), 0);
        let mut prev = built(&b, &materials).occlusion_factor(a, z);
        for &id in &ids {
            let f = rng.random_range(0.1..0.9);
            add_square(&mut b, a.lerp(z, f), dir, 0.3, id);
            let next = built(&b, &materials).occlusion_factor(a, z);
            for k in 0..BANDS {
                prop_assert!(next[k] <= prev[k], "{:?} then {:?}", prev, next);
            }
            prev = next;
        }
    }
}

fn built(b: &MeshBuilder, materials: &MaterialTable) -> Scene {
    b.clone().build(materials.clone(), 1.5).unwrap()
}
