use ekedahl::cohomology::{betti_numbers, supported_cohomology};
use ekedahl::fan::{self, Cone, CyclicQuotientType};
use itertools::Itertools;

fn main() {
    let t = CyclicQuotientType::new(5, vec![1, 2, 3, 4]).unwrap();
    let record = fan::resolve_fan(&fan::quotient_cone(&t).unwrap()).unwrap();
    let f = &record.resolved;
    let exc: Vec<usize> = record.exceptional_ray_indices.iter().copied().collect();

    let mut sum_b4_single = 0;
    for &r in &exc {
        let star = fan::star_fan(f, &Cone::new(vec![r])).unwrap();
        let b = betti_numbers(&star).unwrap();
        let euler: usize = (0..=3).map(|k| b.rank(2 * k)).sum();
        println!(
            "D_{r}: complete={} maxcones={} euler={} betti=({},{},{},{})",
            fan::is_complete(&star).unwrap(),
            star.maximal_cones().len(),
            euler,
            b.rank(0), b.rank(2), b.rank(4), b.rank(6)
        );
        sum_b4_single += b.rank(4);
    }
    println!("rows of d1(2,6) = sum b4(D_i) = {sum_b4_single}");

    let mut sum_b2_pairs = 0;
    let mut pair_count = 0;
    for pair in exc.iter().copied().combinations(2) {
        let c = Cone::new(pair.clone());
        if !f.has_cone(&c) {
            continue;
        }
        pair_count += 1;
        let star = fan::star_fan(f, &c).unwrap();
        let b = betti_numbers(&star).unwrap();
        println!("D_{:?}: b=({},{},{})", pair, b.rank(0), b.rank(2), b.rank(4));
        sum_b2_pairs += b.rank(2);
    }
    println!("pairs spanning cones: {pair_count}; cols of d1(2,6) = sum b2(D_ij) = {sum_b2_pairs}");

    for k in 3..=4 {
        let spanning = exc
            .iter()
            .copied()
            .combinations(k)
            .filter(|s| f.has_cone(&Cone::new(s.clone())))
            .count();
        println!("exceptional {k}-subsets spanning cones: {spanning}");
    }

    // supported cohomology of each single exceptional ray
    for &r in &exc {
        let g = supported_cohomology(f, &Cone::new(vec![r])).unwrap();
        println!(
            "H_D{r}: deg2={} deg4={} deg6={} deg8={}",
            g.rank(2), g.rank(4), g.rank(6), g.rank(8)
        );
    }
}
