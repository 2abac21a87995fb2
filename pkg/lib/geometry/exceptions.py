class GeometryError(Exception):
    """Sphere geometry base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class OffSphereError(GeometryError):
    """A base point that should lie on the radius-R sphere does not"""

    def __init__(self, norm: float, radius: float, msg="Base point is off the sphere"):
        super().__init__(msg)
        self.norm = norm
        self.radius = radius

    def __str__(self):
        return f"{self.msg}: norm={self.norm!r}, R={self.radius!r}"


class InvalidRadiusError(GeometryError):
    def __init__(self, radius: float, msg="Radius must be positive"):
        super().__init__(msg)
        self.radius = radius

    def __str__(self):
        return f"{self.msg}: R={self.radius!r}"
