use divisikit_core::satembed::*;
use std::time::Instant;

fn main() {
    let inst = regular_unsat_instance();
    let params = EmbeddingParams::default();
    let t0 = Instant::now();
    let emb = assemble_family(&inst, &params).unwrap();
    println!("assemble: {:?} dim={}", t0.elapsed(), emb.dim());
    let t1 = Instant::now();
    let _ = emb.branch_matrix(0);
    println!("one branch: {:?}", t1.elapsed());
    let t2 = Instant::now();
    let found = emb.exists_nonnegative_branch().unwrap();
    println!("scan 16 branches: {:?} found={:?}", t2.elapsed(), found.is_some());
    let t3 = Instant::now();
    let dev = emb.shared_square_deviation();
    println!("shared square: {:?} dev={:.2e}", t3.elapsed(), dev);
}
