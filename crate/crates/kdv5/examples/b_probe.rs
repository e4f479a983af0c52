use kdv5::counterexamples::example_pair;
use kdv5::counterexamples::ExampleId;
use kdv5::estimates::rect_xsab_norm;

fn main() {
    let (s, a) = (-0.25, -0.5);
    for id in [ExampleId::Two, ExampleId::ThreeB] {
        for n in [32u32, 64] {
            let pair = example_pair(id, n).unwrap();
            for &b in &[0.35, 0.40, 0.42, 0.44, 0.45, 0.50, 0.60, 0.85] {
                let rf = rect_xsab_norm(&pair.f, s, a, b);
                let rg = rect_xsab_norm(&pair.g, s, a, b);
                println!("id={id} n={n} b={b}: f={rf:?} g={rg:?}");
            }
            for (tag, spec) in [("f", &pair.f), ("g", &pair.g)] {
                for (k, r) in spec.rects().iter().enumerate() {
                    println!(
                        "  {tag}[{k}]: xi=[{:.6e},{:.6e}] slope={:.6e} spine0={:.6e} h={:.6e} amp={:.3e}",
                        r.xi_lo(),
                        r.xi_hi(),
                        r.shear_slope,
                        r.spine_tau(0.5 * (r.xi_lo() + r.xi_hi())),
                        r.tau_halfheight,
                        r.amplitude.norm()
                    );
                }
            }
        }
    }
}
