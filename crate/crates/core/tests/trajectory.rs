use std::cmp::Reverse;
use std::collections::BinaryHeap;

use sonicforge::scene::{BandCoefficients, MaterialTable, MeshBuilder, Scene, Vec3};
use sonicforge::trajectory::{plan_path, OccupancyGrid, CELL_SIZE};

const DOOR: (f64, f64) = (2.5, 3.5);

/// 10 x 3 x 6 m room split by a wall at x = 5 with one 1 m doorway.
fn doorway_room() -> Scene {
    let mut b = MeshBuilder::new();
    b.add_box(Vec3::ZERO, Vec3::new(10.0, 3.0, 6.0), 0);
    b.add_panel(0, 5.0, [0.0, 0.0], [3.0, DOOR.0], 0);
    b.add_panel(0, 5.0, [0.0, DOOR.1], [3.0, 6.0], 0);
    b.build(MaterialTable::new(BandCoefficients::flat(0.3)), 1.5).unwrap()
}

/// Plain Dijkstra over free cells with integer-scaled costs: 1000 per
/// straight step and 1414 per diagonal, no squeezing past blocked corners.
fn grid_dijkstra(g: &OccupancyGrid, a: (usize, usize), b: (usize, usize)) -> Option<u64> {
    let (nx, nz) = g.dims();
    let free = |x: i64, z: i64| {
        x >= 0
            && z >= 0
            && (x as usize) < nx
            && (z as usize) < nz
            && ((x as usize, z as usize) == a
                || (x as usize, z as usize) == b
                || !g.is_blocked((x as usize, z as usize)))
    };
    let mut dist = vec![u64::MAX; nx * nz];
    let mut heap = BinaryHeap::new();
    dist[a.1 * nx + a.0] = 0;
    heap.push(Reverse((0u64, a.0 as i64, a.1 as i64)));
    while let Some(Reverse((d, x, z))) = heap.pop() {
        if (x as usize, z as usize) == b {
            return Some(d);
        }
        if d > dist[z as usize * nx + x as usize] {
            continue;
        }
        for dx in -1i64..=1 {
            for dz in -1i64..=1 {
                if (dx, dz) == (0, 0) || !free(x + dx, z + dz) {
                    continue;
                }
                let diagonal = dx != 0 && dz != 0;
                if diagonal && !(free(x + dx, z) && free(x, z + dz)) {
                    continue;
                }
                let nd = d + if diagonal { 1414 } else { 1000 };
                let k = (z + dz) as usize * nx + (x + dx) as usize;
                if nd < dist[k] {
                    dist[k] = nd;
                    heap.push(Reverse((nd, x + dx, z + dz)));
                }
            }
        }
    }
    None
}

fn segments_cross(p: (f64, f64), q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let orient = |o: (f64, f64), u: (f64, f64), v: (f64, f64)| {
        (u.0 - o.0) * (v.1 - o.1) - (u.1 - o.1) * (v.0 - o.0)
    };
    let d1 = orient(a, b, p);
    let d2 = orient(a, b, q);
    let d3 = orient(p, q, a);
    let d4 = orient(p, q, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Exact shortest x-z path around the wall: visibility graph over the
/// doorway jambs.
fn visibility_optimum(s: (f64, f64), e: (f64, f64)) -> f64 {
    let walls = [((5.0, 0.0), (5.0, DOOR.0)), ((5.0, DOOR.1), (5.0, 6.0))];
    let visible = |p: (f64, f64), q: (f64, f64)| walls.iter().all(|&(a, b)| !segments_cross(p, q, a, b));
    let d = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    let nodes = [s, (5.0, DOOR.0), (5.0, DOOR.1), e];
    let mut best = [f64::INFINITY; 4];
    best[0] = 0.0;
    for _ in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                if i != j && visible(nodes[i], nodes[j]) {
                    best[j] = best[j].min(best[i] + d(nodes[i], nodes[j]));
                }
            }
        }
    }
    best[3]
}

#[test]
fn doorway_path_matches_grid_dijkstra() {
    let scene = doorway_room();
    let grid = OccupancyGrid::build(&scene);
    let cases = [
        ((2.0, 0.8), (8.0, 0.8)),
        ((1.1, 5.3), (9.2, 0.6)),
        ((4.4, 1.0), (5.6, 5.0)),
        ((0.7, 2.9), (9.3, 3.1)),
    ];
    for (s, e) in cases {
        let start = Vec3::new(s.0, 1.5, s.1);
        let end = Vec3::new(e.0, 1.5, e.1);
        let (a, b) = (grid.cell_of(start).unwrap(), grid.cell_of(end).unwrap());
        let cells = grid.shortest_path(a, b).unwrap();
        let astar: f64 = cells
            .windows(2)
            .map(|w| if w[0].0 != w[1].0 && w[0].1 != w[1].1 { 1414.0 } else { 1000.0 })
            .sum();
        assert_eq!(astar as u64, grid_dijkstra(&grid, a, b).unwrap(), "{s:?} -> {e:?}");

        let t = plan_path(&scene, start, end).unwrap();
        let straight = start.distance(end);
        let optimum = visibility_optimum(s, e);
        if optimum > straight + 1e-9 {
            assert!(t.waypoints().len() > 2);
            let through_door = t.waypoints().windows(2).any(|w| {
                let (p, q) = (w[0], w[1]);
                if (p.x - 5.0) * (q.x - 5.0) > 0.0 {
                    return false;
                }
                let u = (5.0 - p.x) / (q.x - p.x);
                let z = p.z + u * (q.z - p.z);
                z > DOOR.0 && z < DOOR.1
            });
            assert!(through_door, "{:?}", t.waypoints());
        }
        let len = t.total_length();
        assert!(len >= optimum - 1e-9, "{len} < {optimum}");
        assert!(len <= optimum + 2.0 * CELL_SIZE, "{len} vs {optimum}");
    }
}

#[test]
fn sealed_doorway_is_unreachable() {
    let mut b = MeshBuilder::new();
    b.add_box(Vec3::ZERO, Vec3::new(10.0, 3.0, 6.0), 0);
    b.add_panel(0, 5.0, [0.0, 0.0], [3.0, 6.0], 0);
    let scene = b.build(MaterialTable::new(BandCoefficients::flat(0.3)), 1.5).unwrap();
    let grid = OccupancyGrid::build(&scene);
    let start = Vec3::new(2.0, 1.5, 3.0);
    let end = Vec3::new(8.0, 1.5, 3.0);
    assert!(plan_path(&scene, start, end).is_err());
    let (a, b) = (grid.cell_of(start).unwrap(), grid.cell_of(end).unwrap());
    assert_eq!(grid_dijkstra(&grid, a, b), None);
}
