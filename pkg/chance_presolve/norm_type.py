from enum import Enum

import numpy


class NormType(Enum):
    """Norms used by the objective (o) and by the scenario balls (õ).
    """
    # Manhattan norm, ball is a cross-polytope
    L1 = "L1"
    # Euclidean norm, the only objective norm the projection oracle solves
    L2 = "L2"
    # Maximum norm, ball is an axis-aligned box
    Linf = "Linf"

    @property
    def order(self) -> float:
        """Order of the norm as understood by numpy.linalg.norm.

        Returns:
            float: 1, 2 or numpy.inf.
        """
        if self is NormType.L1:
            return 1
        if self is NormType.L2:
            return 2
        return numpy.inf

    def evaluate(self, vectors: numpy.ndarray) -> numpy.ndarray:
        """Compute the norm of a vector or of each row of a matrix.

        Args:
            vectors (numpy.ndarray): 1D vector or 2D array of row vectors.

        Returns:
            numpy.ndarray: Norm value (scalar for 1D input).
        """
        vectors = numpy.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            return numpy.linalg.norm(vectors, ord=self.order)
        return numpy.linalg.norm(vectors, ord=self.order, axis=1)

    def euclidean_constant(self, dim: int) -> float:
        """Largest constant k with ||v|| >= k * ||v||_2 for every v in R^dim.

        Args:
            dim (int): Dimension of the space.

        Returns:
            float: 1 for L1 and L2, 1/sqrt(dim) for Linf.
        """
        if self is NormType.Linf:
            return 1.0 / numpy.sqrt(dim)
        return 1.0
