//! Parameter containers that are generic over their leaf type.
//!
//! A block's weights are stored as `Block<Tensor>`; loading them onto a graph yields a
//! `Block<Var>`, and the gradients come back as `Block<Tensor>` again. Visiting order
//! is the field declaration order and doubles as the checkpoint layout.

use rand::Rng;

use crate::tensor::{Shape, Tensor};

/// A nested collection of parameter leaves of type `T`.
pub trait ParamTree<T> {
    type Mapped<U>;

    fn map_tree<U>(&self, f: &mut impl FnMut(&T) -> U) -> Self::Mapped<U>;

    /// Calls `f` with a dotted name for every leaf, in layout order.
    fn visit_tree<'a>(&'a self, prefix: &str, f: &mut impl FnMut(String, &'a T))
    where
        T: 'a;

    fn visit_tree_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut T))
    where
        T: 'a;
}

impl<T, X: ParamTree<T>> ParamTree<T> for Vec<X> {
    type Mapped<U> = Vec<X::Mapped<U>>;

    fn map_tree<U>(&self, f: &mut impl FnMut(&T) -> U) -> Self::Mapped<U> {
        self.iter().map(|x| x.map_tree(f)).collect()
    }

    fn visit_tree<'a>(&'a self, prefix: &str, f: &mut impl FnMut(String, &'a T))
    where
        T: 'a,
    {
        for (i, x) in self.iter().enumerate() {
            x.visit_tree(&format!("{prefix}.{i}"), f);
        }
    }

    fn visit_tree_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut T))
    where
        T: 'a,
    {
        for x in self {
            x.visit_tree_mut(f);
        }
    }
}

/// Declares a struct whose fields are all parameters of type `T`, with `map` and
/// `visit` helpers.
macro_rules! param_struct {
    ($(#[$meta:meta])* pub struct $name:ident { $($(#[$fmeta:meta])* $field:ident),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T = $crate::tensor::Tensor> {
            $($(#[$fmeta])* pub $field: T,)*
        }

        impl<T> $name<T> {
            pub fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> $name<U> {
                $name { $($field: f(&self.$field),)* }
            }
        }

        impl<T> $crate::params::ParamTree<T> for $name<T> {
            type Mapped<U> = $name<U>;

            fn map_tree<U>(&self, f: &mut impl FnMut(&T) -> U) -> $name<U> {
                self.map(f)
            }

            fn visit_tree<'a>(&'a self, prefix: &str, f: &mut impl FnMut(String, &'a T))
    where
        T: 'a {
                $(f(format!("{prefix}.{}", stringify!($field)), &self.$field);)*
            }

            fn visit_tree_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut T))
    where
        T: 'a {
                $(f(&mut self.$field);)*
            }
        }
    };
}

/// Declares a struct of nested parameter trees (other parameter structs or vectors of
/// them). Field types are written in terms of `T`.
macro_rules! param_tree {
    ($(#[$meta:meta])* pub struct $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T = $crate::tensor::Tensor> {
            $($(#[$fmeta])* pub $field: $ty,)*
        }

        impl<T> $name<T> {
            pub fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> $name<U> {
                use $crate::params::ParamTree;
                $name { $($field: self.$field.map_tree(f),)* }
            }
        }

        impl<T> $crate::params::ParamTree<T> for $name<T> {
            type Mapped<U> = $name<U>;

            fn map_tree<U>(&self, f: &mut impl FnMut(&T) -> U) -> $name<U> {
                self.map(f)
            }

            fn visit_tree<'a>(&'a self, prefix: &str, f: &mut impl FnMut(String, &'a T))
    where
        T: 'a {
                $(self.$field.visit_tree(&format!("{prefix}.{}", stringify!($field)), f);)*
            }

            fn visit_tree_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut T))
    where
        T: 'a {
                $(self.$field.visit_tree_mut(f);)*
            }
        }
    };
}

pub(crate) use {param_struct, param_tree};

/// Uniform in `±1/sqrt(fan_in)`, the usual default for linear and conv layers.
pub fn fan_in_uniform<R: Rng + ?Sized>(shape: Shape, fan_in: usize, rng: &mut R) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Tensor::random_uniform(shape, -bound, bound, rng)
}

/// Conv kernel `(out, in, k, k)` and bias `(1, out, 1, 1)`.
pub fn conv_init<R: Rng + ?Sized>(
    out_c: usize,
    in_c: usize,
    k: usize,
    rng: &mut R,
) -> (Tensor, Tensor) {
    let fan_in = in_c * k * k;
    (
        fan_in_uniform([out_c, in_c, k, k], fan_in, rng),
        fan_in_uniform([1, out_c, 1, 1], fan_in, rng),
    )
}

/// Linear weight `(1, 1, in, out)` and bias `(1, 1, 1, out)` acting on the last axis.
pub fn linear_init<R: Rng + ?Sized>(in_f: usize, out_f: usize, rng: &mut R) -> (Tensor, Tensor) {
    (
        fan_in_uniform([1, 1, in_f, out_f], in_f, rng),
        fan_in_uniform([1, 1, 1, out_f], in_f, rng),
    )
}
