use crate::model::{Area, Point};
use crate::scalar::Real;

fn axis<T: Real>(length: T, isd: T) -> Vec<T> {
    let n = (length / isd).floor().to_usize().unwrap_or(0) + 1;
    let span = isd * T::from_usize(n - 1).unwrap_or_else(T::zero);
    let offset = (length - span) / T::lit(2.0);
    (0..n)
        .map(|k| offset + isd * T::from_usize(k).unwrap_or_else(T::zero))
        .collect()
}

/// eNB sites on a square grid of spacing `isd`, centered in `area`, in
/// row-major order (rows by increasing y). `isd` must be positive.
pub fn place_enbs<T: Real>(area: &Area<T>, isd: T) -> Vec<Point<T>> {
    assert!(isd > T::zero(), "inter-site distance must be positive");
    let xs = axis(area.width, isd);
    let ys = axis(area.height, isd);
    ys.iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point::new(x, y)))
        .collect()
}
