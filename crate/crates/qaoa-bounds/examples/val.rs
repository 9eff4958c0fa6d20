use qaoa_bounds::engine::Angles;
use qaoa_bounds::sym::tree_edge_expectation;
fn main() {
    for p in 1..=3usize {
        let a = Angles::fixed_cubic(p).unwrap();
        let v = tree_edge_expectation(p, &a).unwrap();
        println!("p={p}: {v:.12}");
    }
    // exact closed form for p=1: 1/2 + 1/(3*sqrt(3))
    println!("closed form p=1: {:.12}", 0.5 + 1.0 / (3.0 * 3f64.sqrt()));
}
