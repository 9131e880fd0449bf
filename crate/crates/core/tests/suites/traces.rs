//! Scalar hand-trace oracles on f(x) = x^2, produced by
//! `tools/trace_oracle.py`, and runners that measure deviation from them.

use dsa_core::optim::{dsa_step, hd_step, DsaConfig, DsaState, Evaluation, HdConfig, HdState};
use dsa_core::{ParamSet, Result};

pub const HD_TRACE: [(f64, f64); 20] = [
    (0.8, 0.1),
    (0.5888, 0.132),
    (0.41116893184, 0.15084160000000002),
    (0.2791627756593228, 0.1605254506826957),
    (0.18697386228977733, 0.16511677309378903),
    (0.12444807555455434, 0.16720461878869136),
    (0.0825998315149391, 0.16813536028232998),
    (0.05475600058184145, 0.16854653588525656),
    (0.03627831995313799, 0.16872744934215625),
    (0.024030257946853588, 0.16880690757049474),
    (0.015915634959756966, 0.16884177866594885),
    (0.010540699765907834, 0.1688570769384877),
    (0.006980814796942392, 0.16886378741567548),
    (0.004623160051863289, 0.1688667307225913),
    (0.0030617522683160084, 0.16886802165955525),
    (0.0020276847044705375, 0.16886858785838627),
    (0.001342859192065715, 0.168868836189116),
    (0.0008893247616885561, 0.16886894510491776),
    (0.0005889660079992693, 0.168868992874435),
    (0.0003900497901038572, 0.16886901382571717),
];
pub const DSA_TRACE: [(f64, f64); 20] = [
    (0.9475020812521329, 0.05249791874789335),
    (0.8925186815209155, 0.05498339973124641),
    (0.835074429839784, 0.05744425168116372),
    (0.7752056638285777, 0.059868766011242136),
    (0.7129597307084364, 0.062245933120181396),
    (0.6483941000859074, 0.06456563062257435),
    (0.5815753228691488, 0.06681877721681012),
    (0.5125778747564549, 0.0689974481127532),
    (0.44148292449403387, 0.0710949502624904),
    (0.36837706663112874, 0.07310585786298793),
    (0.29335105607173506, 0.07502601055949548),
    (0.2164985777219867, 0.07685247834987936),
    (0.13791507941794745, 0.07858349830422075),
    (0.05769669056246168, 0.08021838885577659),
    (-0.020886807741350433, 0.07858349830449313),
    (0.055965670607331444, 0.07685247835052161),
    (-0.01906033995256362, 0.07502601056056535),
    (0.05404551791008545, 0.07310585786456682),
    (-0.01704943235389307, 0.07109495026463626),
    (0.05194801575964836, 0.06899744811556488),
];
pub const DSA_RAW_PROBE_TRACE: [(f64, f64); 20] = [
    (0.947502081252133, 0.052497918747893314),
    (0.8925186815209156, 0.05498339973124633),
    (0.8350744298397842, 0.057444251681163606),
    (0.775205663828578, 0.05986876601124196),
    (0.712959730708437, 0.06224593312018119),
    (0.6483941000859081, 0.0645656306225741),
    (0.5815753228691498, 0.06681877721680982),
    (0.5125778747564562, 0.06899744811275287),
    (0.4414829244940355, 0.07109495026249008),
    (0.36837706663113057, 0.07310585786298768),
    (0.2933510560717369, 0.07502601055949552),
    (0.21649857772198763, 0.07685247834988025),
    (0.13791507941794423, 0.07858349830422491),
    (0.057696690562430805, 0.08021838885580425),
    (-0.024060757056040938, 0.08175744761918026),
    (0.059141081454728475, 0.0832018385124984),
    (-0.02541239203525575, 0.08455347349069908),
    (0.06040250147155682, 0.08581489350850101),
    (-0.02658665108998133, 0.08698915256225823),
    (0.06149305670436321, 0.08807970779600101),
];

fn square(p: &ParamSet<f64>) -> Result<Evaluation<f64>> {
    let x = p.tensors()[0].data()[0];
    Ok(Evaluation {
        loss: x * x,
        grads: ParamSet::from_vec("x", vec![2.0 * x]),
    })
}

fn x_of(p: &ParamSet<f64>) -> f64 {
    p.tensors()[0].data()[0]
}

/// Largest |x - x_ref| or |lr - lr_ref| over the trace, with the step it occurs at.
pub type Deviation = (f64, usize);

fn worst(dev: &mut Deviation, t: usize, d: f64) {
    if d > dev.0 || d.is_nan() {
        *dev = (d, t);
    }
}

/// HD from x0 = 1, alpha0 = 0.1, beta = 0.01.
pub fn hd_deviation() -> Deviation {
    let cfg = HdConfig { alpha0: 0.1, beta: 0.01 };
    let mut state = HdState::new(&cfg);
    let mut w = ParamSet::from_vec("x", vec![1.0]);
    let mut dev = (0.0, 0);
    for (t, &(x, lr)) in HD_TRACE.iter().enumerate() {
        let out = hd_step(&mut w, &square, &mut state, &cfg, None).unwrap();
        worst(&mut dev, t, (x_of(&w) - x).abs().max((out.lr.mean - lr).abs()));
    }
    dev
}

/// DSA from x0 = 1 under `cfg`.
pub fn dsa_deviation(cfg: DsaConfig<f64>, trace: &[(f64, f64)]) -> Deviation {
    let mut w = ParamSet::from_vec("x", vec![1.0]);
    let mut state = DsaState::new(&cfg, &w);
    let mut dev = (0.0, 0);
    for (t, &(x, lr)) in trace.iter().enumerate() {
        let out = dsa_step(&mut w, &square, &mut state, &cfg, None).unwrap();
        worst(&mut dev, t, (x_of(&w) - x).abs().max((out.lr.mean - lr).abs()));
    }
    dev
}

pub type TraceCase = (&'static str, DsaConfig<f64>, &'static [(f64, f64)]);

/// The three DSA trace configurations: per-parameter and scalar alpha on the
/// default probe, and the raw-gradient probe.
pub fn dsa_cases() -> [TraceCase; 3] {
    let base = DsaConfig { alpha0: 0.0, ..DsaConfig::default() };
    [
        ("per-parameter", base, &DSA_TRACE),
        ("scalar", DsaConfig { per_parameter: false, ..base }, &DSA_TRACE),
        ("raw-gradient-probe", DsaConfig { raw_gradient_probe: true, ..base }, &DSA_RAW_PROBE_TRACE),
    ]
}
