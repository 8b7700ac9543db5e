use bgrd_core::rng::Stream;
use bgrd_core::special::{quadrature_oracle, std_normal_pdf, tail_prob, truncated_moment, Interval};

#[test]
fn truncated_moments_match_quadrature() {
    let mut rng = Stream::new(17, &[]);
    for _ in 0..200 {
        let a = -6.0 + 12.0 * rng.uniform();
        let b = a + 6.0 * rng.uniform();
        let iv = Interval::new(a, b).unwrap();
        for l in 0..3u32 {
            let closed = truncated_moment(l, iv).unwrap();
            let quad = quadrature_oracle(|s| s.powi(l as i32) * std_normal_pdf(s), iv, 1e-13).unwrap();
            assert!((closed - quad).abs() < 1e-10, "l={l} [{a}, {b}]");
        }
    }
}

#[test]
fn doubled_tail_matches_quadrature() {
    let q = quadrature_oracle(std_normal_pdf, Interval::upper_tail(1.0).unwrap(), 1e-14).unwrap();
    assert!((tail_prob(1.0).unwrap() - 2.0 * q).abs() < 1e-12);
    assert!((tail_prob(1.0).unwrap() - 0.317_310_507_862_914_15).abs() < 1e-14);
}
