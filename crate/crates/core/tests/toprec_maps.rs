use rmtk_core::maps::{connected_correlator_coeffs, free_energy_coeffs};
use rmtk_core::model::Potential;
use rmtk_core::toprec::{SpectralCurve, TopRec};
use rug::Rational;

fn recursion(order: usize) -> TopRec {
    TopRec::new(SpectralCurve::from_potential(&Potential::formal_quartic(order)).unwrap()).unwrap()
}

fn compare(tr: &mut TopRec, g: usize, mu: &[usize], order: usize) {
    let w = tr.w_coefficient(g, mu).unwrap();
    let table = connected_correlator_coeffs(mu, order).unwrap();
    for q in 0..=order {
        let want = table.get(&(g, q)).cloned().unwrap_or_else(Rational::new);
        assert_eq!(w.coeff(q), want, "g={g} mu={mu:?} q={q}");
    }
}

#[test]
fn disc_and_cylinder() {
    let mut tr = recursion(2);
    for mu in 1..=6 {
        compare(&mut tr, 0, &[mu], 2);
    }
    compare(&mut tr, 0, &[2, 2], 2);
    compare(&mut tr, 0, &[1, 1], 2);
    compare(&mut tr, 0, &[1, 3], 2);
}

#[test]
fn torus_one_point() {
    let mut tr = recursion(2);
    for mu in 1..=4 {
        compare(&mut tr, 1, &[mu], 2);
    }
}

#[test]
fn pants_and_torus_two_point() {
    let mut tr = recursion(1);
    compare(&mut tr, 0, &[2, 2, 2], 1);
    compare(&mut tr, 0, &[1, 1, 2], 1);
    compare(&mut tr, 1, &[2, 2], 1);
    compare(&mut tr, 1, &[1, 1], 1);
}

#[test]
fn forms_are_clean() {
    let mut tr = recursion(2);
    for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2), (2, 1)] {
        let f = tr.omega(g, n).unwrap();
        assert!(f.is_symmetric(), "({g},{n}) not symmetric");
        assert!(!f.has_residue_terms(), "({g},{n}) has a simple pole");
    }
}

#[test]
fn genus_two_free_energy() {
    let mut tr = recursion(2);
    let f2 = tr.free_energy(2).unwrap();
    let shifted = tr.free_energy_with_constant(2, &Rational::from((17, 3))).unwrap();
    assert_eq!(f2, shifted);
    let vac = free_energy_coeffs(2).unwrap();
    for q in 1..=2 {
        assert_eq!(f2.coeff(q), vac.get(&(2, q)).cloned().unwrap_or_else(Rational::new), "q={q}");
    }
    // genus 0 and 1 vacuum terms exist at these orders, so the oracle is not vacuous
    assert_eq!(vac[&(0, 1)], Rational::from((1, 2)));
}

#[test]
fn gaussian_genus_two_constant() {
    let mut tr = TopRec::new(SpectralCurve::gaussian()).unwrap();
    let f2 = tr.free_energy(2).unwrap();
    println!("gaussian F_2 = {}", f2.coeff(0));
}
