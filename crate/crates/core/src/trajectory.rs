//! Indexed sequences of group elements.
//!
//! Classifiers only need the elements and the displacements `g_m⁻¹ g_n`.
//! Sequences backed by words can compute displacements from the reduced
//! word `w_m⁻¹ w_n`, which stays accurate where the plain matrix product
//! `g_m⁻¹ · g_n` loses digits.

use crate::matrix::GroupElement;

pub trait Trajectory: Sync {
    fn len(&self) -> usize;

    fn dim(&self) -> usize;

    fn element(&self, n: usize) -> GroupElement;

    /// `g_m⁻¹ g_n`
    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        self.element(m).inv_mul(&self.element(n))
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Trajectory for [GroupElement] {
    fn len(&self) -> usize {
        <[GroupElement]>::len(self)
    }

    fn dim(&self) -> usize {
        self.first().map_or(0, |g| g.dim())
    }

    fn element(&self, n: usize) -> GroupElement {
        self[n].clone()
    }

    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        self[m].inv_mul(&self[n])
    }
}

impl Trajectory for Vec<GroupElement> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn dim(&self) -> usize {
        Trajectory::dim(self.as_slice())
    }

    fn element(&self, n: usize) -> GroupElement {
        self[n].clone()
    }

    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        self[m].inv_mul(&self[n])
    }
}

/// The sub-trajectory `g_{offset}, g_{offset+stride}, …`.
pub struct Strided<'a, T: Trajectory + ?Sized> {
    pub base: &'a T,
    pub offset: usize,
    pub stride: usize,
}

impl<T: Trajectory + ?Sized> Trajectory for Strided<'_, T> {
    fn len(&self) -> usize {
        if self.base.len() <= self.offset {
            0
        } else {
            (self.base.len() - self.offset).div_ceil(self.stride)
        }
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn element(&self, n: usize) -> GroupElement {
        self.base.element(self.offset + n * self.stride)
    }

    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        self.base
            .displacement(self.offset + m * self.stride, self.offset + n * self.stride)
    }
}
