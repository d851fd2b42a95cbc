//! Writing and reading the dense and sparse text formats.

use uma::data::{generate_synthetic, load_dense, load_sparse, write_dense, write_sparse, Column, DenseFormat};

fn main() -> uma::Result<()> {
    let dir = std::env::temp_dir().join("uma-file-formats");
    std::fs::create_dir_all(&dir)?;
    let (data, _) = generate_synthetic(3, 5, 0.05, 11)?;

    let dense = dir.join("points.csv");
    write_dense(&dense, &data, b',', false)?;
    print!("{}:\n{}", dense.display(), std::fs::read_to_string(&dense)?);
    let back = load_dense(&dense, &DenseFormat::default())?;
    println!("read back {} rows, {} features, labels {:?}\n", back.len(), back.dim(), back.label_names().unwrap());

    let tabbed = dir.join("points.tsv");
    std::fs::write(&tabbed, "a\t0.5\t-1\nb\t0\t2\nc\t1\t1\n")?;
    let format = DenseFormat { delimiter: b'\t', label_column: Column::FIRST, ..DenseFormat::default() };
    let back = load_dense(&tabbed, &format)?;
    println!("label-first tab file: classes {:?}, observed {:?}\n", back.label_names().unwrap(), back.observed());

    let sparse = dir.join("points.svm");
    write_sparse(&sparse, &data)?;
    print!("{}:\n{}", sparse.display(), std::fs::read_to_string(&sparse)?);
    let back = load_sparse(&sparse)?;
    println!("read back {} rows of dimension {}", back.len(), back.dim());
    Ok(())
}
