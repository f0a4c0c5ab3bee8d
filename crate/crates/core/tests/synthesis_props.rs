use proptest::prelude::*;
use sonicforge::rir::ImpulseResponse;
use sonicforge::scene::Vec3;
use sonicforge::synthesis::{convolve, render_moving, MovingRender};
use sonicforge::trajectory::Trajectory;
use sonicforge::AudioBuffer;

const FS: u32 = 8000;

fn ir(taps: Vec<f64>) -> ImpulseResponse {
    ImpulseResponse {
        channels: vec![taps],
        sample_rate: FS,
        source_position: Vec3::ZERO,
        receiver_center: Vec3::ZERO,
    }
}

#[derive(Debug, Clone)]
struct Case {
    dry: Vec<f64>,
    rirs: Vec<Vec<f64>>,
    length: f64,
}

fn case() -> impl Strategy<Value = Case> {
    (2usize..6, 8usize..48, 200usize..3000, 0.5f64..6.0).prop_flat_map(|(n, taps, len, length)| {
        (
            prop::collection::vec(-1.0f64..1.0, len),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, taps), n),
        )
            .prop_map(move |(dry, rirs)| Case { dry, rirs, length })
    })
}

fn moving(c: &Case) -> MovingRender {
    let dur = c.dry.len() as f64 / FS as f64;
    let traj = Trajectory::new(vec![Vec3::new(0.0, 1.5, 0.0), Vec3::new(c.length, 1.5, 0.0)])
        .unwrap()
        .with_duration(dur)
        .unwrap();
    let step = c.length / (c.rirs.len() - 1) as f64;
    let positions = (0..c.rirs.len())
        .map(|j| {
            let s = if j + 1 == c.rirs.len() { c.length } else { j as f64 * step };
            (s, traj.position_at_arc(s))
        })
        .collect();
    MovingRender {
        positions,
        rirs: c.rirs.iter().cloned().map(ir).collect(),
        trajectory: traj,
    }
}

fn render(c: &Case, gain: f64) -> Vec<f64> {
    let dry = AudioBuffer::mono(c.dry.iter().map(|v| v * gain).collect(), FS).unwrap();
    render_moving(&dry, &moving(c)).unwrap().channel(0).to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_the_input_scales_the_output(c in case(), a in -4.0f64..4.0) {
        let y = render(&c, 1.0);
        let ya = render(&c, a);
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for (p, q) in y.iter().zip(&ya) {
            prop_assert!((a * p - q).abs() <= 1e-9 * peak * a.abs().max(1.0));
        }
    }

    #[test]
    fn output_is_a_crossfade_of_bracketing_renders(c in case()) {
        let mr = moving(&c);
        let dry = AudioBuffer::mono(c.dry.clone(), FS).unwrap();
        let renders: Vec<Vec<f64>> = mr
            .rirs
            .iter()
            .map(|h| convolve(&dry, h).unwrap().channel(0).to_vec())
            .collect();
        let y = render_moving(&dry, &mr).unwrap().channel(0).to_vec();
        prop_assert_eq!(y.len(), c.dry.len() + c.rirs[0].len() - 1);
        let arcs: Vec<f64> = mr.positions.iter().map(|p| p.0).collect();
        let total = *arcs.last().unwrap();
        for (n, &v) in y.iter().enumerate() {
            prop_assert!(v.is_finite());
            let s = if n >= c.dry.len() { total } else { total * n as f64 / c.dry.len() as f64 };
            let j = (0..arcs.len() - 1).rev().find(|&j| arcs[j] <= s).unwrap_or(0);
            let alpha = ((s - arcs[j]) / (arcs[j + 1] - arcs[j])).clamp(0.0, 1.0);
            let (p, q) = (renders[j][n], renders[j + 1][n]);
            prop_assert!(v.abs() <= (1.0 - alpha) * p.abs() + alpha * q.abs() + 1e-9);
            if p * q >= 0.0 {
                prop_assert!(v.abs() <= p.abs().max(q.abs()) + 1e-9);
            }
        }
    }

    #[test]
    fn finite_inputs_give_finite_output(c in case(), scale in prop::sample::select(vec![1e-300, 1e-6, 1.0, 1e6, 1e100])) {
        let y = render(&c, scale);
        prop_assert!(y.iter().all(|v| v.is_finite()));
    }
}
