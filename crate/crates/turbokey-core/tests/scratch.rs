use turbokey_core::channel::TurbulenceParams;
use turbokey_core::detection::{homodyne_ber, kennedy_ber, Receiver, SignalAmplitude};
use turbokey_core::montecarlo::{mc_ber, mc_skr, McConfig};
use turbokey_core::qkd::{optimize_beta, skr_homodyne, skr_kennedy, AttackModel};

#[test]
fn scratch_probe() {
    let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
    println!("=== criterion 2 probe: worst FW cases ===");
    for &(n, s0, rho, eta) in &[
        (4usize, 0.3, 0.0, 0.5),
        (4, 0.3, 0.0, 0.9),
        (4, 0.3, 0.0, 0.2),
        (2, 0.3, 0.0, 0.5),
        (4, 0.3, 0.5, 0.5),
        (4, 0.1, 0.0, 0.5),
    ] {
        let params = TurbulenceParams::from_total_transmittance(n, eta, s0, rho).unwrap();
        let cfg = McConfig::new(10_000_000, 20_260_810);
        for receiver in [Receiver::Kennedy, Receiver::Homodyne] {
            let cf = match receiver {
                Receiver::Kennedy => kennedy_ber(&beta, &params).unwrap().ber,
                Receiver::Homodyne => homodyne_ber(&beta, &params).unwrap().ber,
            };
            let mc = mc_ber(receiver, &beta, &params, &cfg).unwrap();
            let rel = (cf - mc.value) / mc.value;
            let sig = (cf - mc.value) / mc.stderr;
            println!(
                "N={n} s0={s0} rho={rho} eta={eta} {receiver:?}: cf={cf:.6e} mc={:.6e} rel={:+.3}% sig={sig:+.1}",
                mc.value,
                rel * 100.0
            );
        }
    }

    println!("=== criterion 3 probe: SKR closed vs MC at defaults ===");
    for &eta in &[0.1, 0.3, 0.5, 0.8] {
        let params = TurbulenceParams::from_total_transmittance(4, eta, 0.1, 0.0).unwrap();
        let cfg = McConfig::new(10_000_000, 777);
        for attack in [AttackModel::IndividualHelstrom, AttackModel::CollectiveHolevo] {
            for receiver in [Receiver::Kennedy, Receiver::Homodyne] {
                let cf = match receiver {
                    Receiver::Kennedy => skr_kennedy(&beta, &params, attack).unwrap(),
                    Receiver::Homodyne => skr_homodyne(&beta, &params, attack).unwrap(),
                };
                let mc = mc_skr(receiver, &beta, &params, attack, &cfg).unwrap();
                let rel = (cf.skr - mc.value) / mc.value;
                let sig = (cf.skr - mc.value) / mc.stderr;
                println!(
                    "eta={eta} {attack:?} {receiver:?}: cf={:.6e} mc={:.6e} rel={:+.3}% sig={sig:+.1} kept={:.4}",
                    cf.skr, mc.value, rel * 100.0, cf.kept_fraction
                );
            }
        }
    }

    println!("=== criterion 4: Fig3 trend ===");
    for &eta in &[0.3, 0.9] {
        let params = TurbulenceParams::from_total_transmittance(4, eta, 0.1, 0.0).unwrap();
        let k = kennedy_ber(&beta, &params).unwrap().ber;
        let h = homodyne_ber(&beta, &params).unwrap().ber;
        println!("eta={eta}: kennedy={k:.6e} homodyne={h:.6e} ratio={:.4}", k / h);
    }

    println!("=== criterion 6: Fig6 trend (collective) ===");
    for &eta in &[0.2, 0.8] {
        let params = TurbulenceParams::from_total_transmittance(4, eta, 0.1, 0.0).unwrap();
        let k = skr_kennedy(&beta, &params, AttackModel::CollectiveHolevo).unwrap().skr;
        let h = skr_homodyne(&beta, &params, AttackModel::CollectiveHolevo).unwrap().skr;
        println!("eta={eta}: skr_k={k:.6e} skr_h={h:.6e} diff={:+.6e}", k - h);
    }

    println!("=== criterion 7: Fig8 trend, homodyne SKR vs N at eta=0.4 ===");
    for &n in &[1usize, 2, 4] {
        let params = TurbulenceParams::from_total_transmittance(n, 0.4, 0.1, 0.0).unwrap();
        for attack in [AttackModel::IndividualHelstrom, AttackModel::CollectiveHolevo] {
            let h = skr_homodyne(&beta, &params, attack).unwrap().skr;
            println!("N={n} {attack:?}: skr_h={h:.6e}");
        }
    }

    println!("=== criterion 5: Fig5 trend, BER vs N at eta=0.5 ===");
    for &n in &[1usize, 2, 4] {
        let params = TurbulenceParams::from_total_transmittance(n, 0.5, 0.1, 0.0).unwrap();
        let k = kennedy_ber(&beta, &params).unwrap().ber;
        let h = homodyne_ber(&beta, &params).unwrap().ber;
        println!("N={n}: kennedy={k:.6e} homodyne={h:.6e}");
    }

    println!("=== criterion 8: 3dB beating at eta=0.3 individual ===");
    let params = TurbulenceParams::from_total_transmittance(4, 0.3, 0.1, 0.0).unwrap();
    let (b2, skr) = optimize_beta(&params, AttackModel::IndividualHelstrom, Receiver::Kennedy, (0.1, 6.0)).unwrap();
    println!("beta_sq_opt={b2:.4} skr_opt={skr:.6e}");

    println!("=== criterion 10: robustness spread at eta=0.4 collective beta2=2 ===");
    for receiver in [Receiver::Kennedy, Receiver::Homodyne] {
        let mut vals = vec![];
        for &s0 in &[0.05, 0.3] {
            let params = TurbulenceParams::from_total_transmittance(4, 0.4, s0, 0.0).unwrap();
            let v = match receiver {
                Receiver::Kennedy => skr_kennedy(&beta, &params, AttackModel::CollectiveHolevo).unwrap().skr,
                Receiver::Homodyne => skr_homodyne(&beta, &params, AttackModel::CollectiveHolevo).unwrap().skr,
            };
            vals.push(v);
        }
        let spread = (vals[0] - vals[1]).abs() / vals[0].max(vals[1]);
        println!("{receiver:?}: s0=0.05 -> {:.6e}, s0=0.3 -> {:.6e}, rel spread={spread:.4}", vals[0], vals[1]);
    }
}
