use exphair_web::{contraction_summary, forward_orbit, hair_points};

#[test]
fn hair_starts_on_the_line() {
    let pts = hair_points("[1] | repeat", 1.0, 30.0, 33.0).unwrap();
    assert!(pts.len() >= 4 && pts.len().is_multiple_of(2));
    assert!((pts[0] - 30.0).abs() < 1e-6);
    assert!((pts[1] - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!(hair_points("[1", 1.0, 30.0, 33.0).is_err());
}

#[test]
fn orbit_and_contraction() {
    let o = forward_orbit(-5.0, 0.3, 1.0, 3);
    assert_eq!(o.len(), 8);
    assert_eq!((o[0], o[1]), (-5.0, 0.3));
    let c = contraction_summary(2, 1.0, 60, true).unwrap();
    let dist = ((c[1] - c[3]).powi(2) + (c[2] - c[4]).powi(2)).sqrt();
    assert!(dist < 1e-6);
}
