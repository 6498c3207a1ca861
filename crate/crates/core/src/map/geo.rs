use std::ops::{Add, Mul, Sub};

use crate::num::Scalar;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LatLon<S> {
    pub lat: S,
    pub lon: S,
}

impl<S: Scalar> LatLon<S> {
    pub fn new(lat: S, lon: S) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && self.lat.abs() <= S::lit(90.0)
            && self.lon.abs() <= S::lit(180.0)
    }
}

/// Local Cartesian position in meters, x east and y north.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn norm(self) -> S {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> S {
        (self - other).norm()
    }

    /// Direction of travel from `self` to `other`, radians counter-clockwise from east.
    pub fn heading_to(self, other: Self) -> S {
        let d = other - self;
        d.y.atan2(d.x)
    }

    pub fn lerp(self, other: Self, t: S) -> Self {
        self + (other - self) * t
    }
}

impl<S: Scalar> Add for Point<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Scalar> Sub for Point<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Scalar> Mul<S> for Point<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

/// Equirectangular projection about `origin`.
pub fn project<S: Scalar>(p: LatLon<S>, origin: LatLon<S>) -> Point<S> {
    let r = S::lit(EARTH_RADIUS_M);
    let rad = S::PI() / S::lit(180.0);
    let x = r * (p.lon - origin.lon) * (origin.lat * rad).cos() * rad;
    let y = r * (p.lat - origin.lat) * rad;
    Point::new(x, y)
}

/// Inverse of [`project`] for the same origin.
pub fn unproject<S: Scalar>(p: Point<S>, origin: LatLon<S>) -> LatLon<S> {
    let r = S::lit(EARTH_RADIUS_M);
    let deg = S::lit(180.0) / S::PI();
    let rad = S::PI() / S::lit(180.0);
    let lat = origin.lat + p.y / r * deg;
    let lon = origin.lon + p.x / (r * (origin.lat * rad).cos()) * deg;
    LatLon::new(lat, lon)
}

/// Midpoint of the lat/lon bounding box of `points`.
pub fn bbox_centroid<S: Scalar, I: IntoIterator<Item = LatLon<S>>>(points: I) -> Option<LatLon<S>> {
    let mut it = points.into_iter();
    let first = it.next()?;
    let (mut lo, mut hi) = (first, first);
    for p in it {
        lo.lat = lo.lat.min(p.lat);
        lo.lon = lo.lon.min(p.lon);
        hi.lat = hi.lat.max(p.lat);
        hi.lon = hi.lon.max(p.lon);
    }
    Some(LatLon::new((lo.lat + hi.lat) * S::half(), (lo.lon + hi.lon) * S::half()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn origin_maps_to_zero() {
        let o = LatLon::new(51.49, 7.41);
        assert_eq!(project(o, o), Point::new(0.0, 0.0));
    }

    #[test]
    fn one_degree_north() {
        let o = LatLon::new(10.0, 20.0);
        let p = project(LatLon::new(11.0, 20.0), o);
        // R * pi / 180
        assert_relative_eq!(p.y, 111_194.926_644_558_7, epsilon = 1e-6);
        assert_eq!(p.x, 0.0);
    }

    #[test]
    fn longitude_shrinks_with_latitude() {
        let at_equator = project(LatLon::new(0.0, 0.01), LatLon::new(0.0, 0.0)).x;
        let at_sixty = project(LatLon::new(60.0, 0.01), LatLon::new(60.0, 0.0)).x;
        assert_relative_eq!(at_sixty, 0.5 * at_equator, max_relative = 1e-12);
    }

    #[test]
    fn single_precision_matches_double() {
        let o32 = LatLon::new(51.49f32, 7.41f32);
        let p32 = project(LatLon::new(51.50f32, 7.42f32), o32);
        let p64 = project(LatLon::new(51.50f64, 7.42f64), LatLon::new(51.49, 7.41));
        assert_relative_eq!(f64::from(p32.x), p64.x, max_relative = 1e-3);
        assert_relative_eq!(f64::from(p32.y), p64.y, max_relative = 1e-3);
    }

    #[test]
    fn unproject_inverts_project() {
        let o = LatLon::new(51.49, 7.41);
        let q = LatLon::new(51.4931, 7.4077);
        let back = unproject(project(q, o), o);
        assert_relative_eq!(back.lat, q.lat, epsilon = 1e-12);
        assert_relative_eq!(back.lon, q.lon, epsilon = 1e-12);
    }

    #[test]
    fn centroid_of_box() {
        let c = bbox_centroid([LatLon::new(1.0, 2.0), LatLon::new(3.0, -2.0), LatLon::new(2.0, 0.0)]).unwrap();
        assert_eq!(c, LatLon::new(2.0, 0.0));
        assert!(bbox_centroid(Vec::<LatLon<f64>>::new()).is_none());
    }
}
