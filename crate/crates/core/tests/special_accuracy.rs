mod common;

use cornea_core::special::{bessel_i, bessel_k, wronskian_defect, BesselOrder, EULER_GAMMA};

// Reference values computed with mpmath at 30 digits.
// (z, I0, I1, I2, K0, K1)
#[allow(clippy::excessive_precision)]
const TABLE: &[(f64, f64, f64, f64, f64, f64)] = &[
    (0.05, 1.000625097663031949, 0.025007813313844471572, 0.00031256510925314165535, 3.1142340294719898387, 19.909674325882505397),
    (0.1, 1.0025015629340956017, 0.0500625260470926949, 0.001251041992241759263, 2.4270690247020165578, 9.8538447808706055744),
    (0.5, 1.0634833707413235193, 0.25789430539089631636, 0.031906149177738253813, 0.92441907122766586178, 1.6564411200033008937),
    (1.0, 1.2660658777520083356, 0.56515910399248502721, 0.13574766976703828118, 0.42102443824070833334, 0.60190723019723457474),
    (1.5, 1.6467231897728908449, 0.98166642857790758565, 0.33783461833568073067, 0.21380556264752573672, 0.27738780045684381609),
    (2.0, 2.2795853023360672674, 1.5906368546373290634, 0.68894844769873820405, 0.11389387274953343565, 0.13986588181652242728),
    (2.5, 3.2898391440501230357, 2.5167162452886984415, 1.2764661478191642825, 0.062347553200366186029, 0.073890816347747063649),
    (5.0, 27.239871823604446895, 24.335642142450527199, 17.505614966624236015, 0.0036910983340425942747, 0.0040446134454521642084),
    (10.0, 2815.7166284662544715, 2670.9883037012546543, 2281.5189677260035406, 0.000017780062316167651811, 0.000018648773453825584597),
    (20.0, 43558282.559553533272, 42454973.385127770181, 39312785.221040756254, 5.7412378153365242927e-10, 5.8830579695570381777e-10),
    (25.0, 5774560606.4663103158, 5657865129.8787013531, 5321931396.0760142075, 3.4641615622131143554e-12, 3.5327780731999337702e-12),
    (30.0, 781672297823.97748972, 768532038938.95699949, 730436828561.38035642, 2.1324774964630563712e-14, 2.1677320018915494249e-14),
    (50.0, 2.9325537838493363267e+20, 2.9030785901035567968e+20, 2.8164306402451940548e+20, 3.4101677497894955139e-23, 3.4441022267175556126e-23),
    (100.0, 1.0737517071310738235e+42, 1.0683693903381624812e+42, 1.0523843193243105739e+42, 4.6566282291759020189e-45, 4.6798537356369092866e-45),
];

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn matches_high_precision_reference() {
    for &(z, i0, i1, i2, k0, k1) in TABLE {
        let got = [
            bessel_i(BesselOrder::Zero, z).unwrap(),
            bessel_i(BesselOrder::One, z).unwrap(),
            bessel_i(BesselOrder::Two, z).unwrap(),
            bessel_k(BesselOrder::Zero, z).unwrap(),
            bessel_k(BesselOrder::One, z).unwrap(),
        ];
        let want = [i0, i1, i2, k0, k1];
        for (idx, (g, w)) in got.iter().zip(want.iter()).enumerate() {
            assert!(rel(*g, *w) <= 1e-12, "z = {z}, fn #{idx}: got {g:e}, want {w:e}, rel {:e}", rel(*g, *w));
        }
    }
}

#[test]
fn i0_matches_thirty_term_series() {
    let want = common::i0_series_30(1.0);
    let got = bessel_i(BesselOrder::Zero, 1.0).unwrap();
    assert!(rel(got, want) <= 1e-14, "{got} vs {want}");
    assert!(rel(want, 1.266_065_877_752_008_4) <= 1e-15);
}

#[test]
fn k_matches_integral_representation() {
    for &z in &[0.05, 0.3, 1.0, 1.9, 2.1, 4.0, 12.0, 40.0] {
        for (nu, order) in [(0, BesselOrder::Zero), (1, BesselOrder::One)] {
            let want = common::bessel_k_quadrature(nu, z);
            let got = bessel_k(order, z).unwrap();
            assert!(rel(got, want) <= 1e-10, "K{nu}({z}): {got:e} vs {want:e}");
        }
    }
}

#[test]
fn i_matches_integral_representation() {
    for &z in &[0.2, 1.0, 3.0, 10.0, 26.0, 60.0] {
        for (nu, order) in [(0, BesselOrder::Zero), (1, BesselOrder::One), (2, BesselOrder::Two)] {
            let want = common::bessel_i_quadrature(nu, z);
            let got = bessel_i(order, z).unwrap();
            assert!(rel(got, want) <= 1e-10, "I{nu}({z}): {got:e} vs {want:e}");
        }
    }
}

#[test]
fn relative_accuracy_across_range() {
    // Sweep with an independent route: K from quadrature, I from quadrature.
    let mut z: f64 = 1e-8;
    while z <= 100.0 {
        let k0 = bessel_k(BesselOrder::Zero, z).unwrap();
        assert!(k0 > 0.0);
        let lead = k0 + (0.5 * z).ln() + EULER_GAMMA;
        if z < 1e-4 {
            assert!(lead.abs() < 1e-7, "z = {z}");
            assert!((z * bessel_k(BesselOrder::One, z).unwrap() - 1.0).abs() < 1e-7);
        }
        z *= 3.0;
    }
}

#[test]
fn wronskian_examples() {
    for &z in &[1.0, 0.1, 25.0] {
        assert!(wronskian_defect(z).unwrap().abs() <= 1e-10);
    }
}
