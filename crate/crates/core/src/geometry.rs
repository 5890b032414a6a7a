//! Minimal 3-vector helpers. Points are plain `[f64; 3]` in meters.

pub type Point = [f64; 3];

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Point, k: f64) -> Point {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}
