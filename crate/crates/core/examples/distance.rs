//! Print the point-to-box distance along one axis for boxes of several
//! widths: shallow slope inside, steep slope outside, meeting at the faces.
//!
//! cargo run --example distance

use boxkb::model::{dist, kappa};
use boxkb::{BranchMode, HyperBox};

fn main() -> boxkb::Result<()> {
    let widths = [0.0, 1.0, 2.0, 4.0];
    print!("{:>6}", "x");
    for w in widths {
        print!("  w={:<6}", w + 1.0);
    }
    println!();
    for step in -12..=12 {
        let x = step as f64 * 0.25;
        print!("{x:>6.2}");
        for w in widths {
            let b = HyperBox::new(vec![-w / 2.0], vec![w / 2.0])?;
            print!("  {:<8.4}", dist(&[x], &b, BranchMode::PerPoint)?[0]);
        }
        println!();
    }
    for w in widths {
        println!("kappa({}) = {:.4}", w + 1.0, kappa(w + 1.0));
    }
    Ok(())
}
