from typing import Any, Union

import numpy as np
from pydantic_core import core_schema
from typing_extensions import Annotated


def serialize_array(value: np.ndarray) -> list:
    """
    Real vectors become plain floats and complex vectors become `[re, im]`
    pairs. Both annotations share this so a union of them serializes by dtype.
    """
    if np.iscomplexobj(value):
        return [[float(z.real), float(z.imag)] for z in value]
    return [float(x) for x in value]


class FloatArrayAnnotation:
    @classmethod
    def __get_pydantic_core_schema__(
        cls, _source_type: Any, _handler: Any
    ) -> core_schema.CoreSchema:
        return core_schema.json_or_python_schema(
            json_schema=core_schema.chain_schema(
                [
                    core_schema.list_schema(core_schema.float_schema()),
                    core_schema.no_info_plain_validator_function(cls.validate),
                ]
            ),
            python_schema=core_schema.no_info_plain_validator_function(cls.validate),
            serialization=core_schema.plain_serializer_function_ser_schema(
                serialize_array
            ),
        )

    @classmethod
    def validate(cls, value: Any) -> np.ndarray:
        if np.iscomplexobj(value):
            raise ValueError("Expected real values")
        try:
            array = np.array(value, dtype=np.float64)
        except (TypeError, ValueError):
            raise ValueError("Expected a sequence of real numbers")
        if array.ndim != 1:
            raise ValueError("Expected a one-dimensional array")
        array.flags.writeable = False
        return array


class ComplexArrayAnnotation:
    """
    Complex vectors travel as lists of ``[re, im]`` pairs so that both JSON and
    BSON can hold them.
    """

    @classmethod
    def __get_pydantic_core_schema__(
        cls, _source_type: Any, _handler: Any
    ) -> core_schema.CoreSchema:
        pair_schema = core_schema.tuple_schema(
            [core_schema.float_schema(), core_schema.float_schema()]
        )
        return core_schema.json_or_python_schema(
            json_schema=core_schema.chain_schema(
                [
                    core_schema.list_schema(pair_schema),
                    core_schema.no_info_plain_validator_function(cls.validate),
                ]
            ),
            python_schema=core_schema.no_info_plain_validator_function(cls.validate),
            serialization=core_schema.plain_serializer_function_ser_schema(
                serialize_array
            ),
        )

    @classmethod
    def validate(cls, value: Any) -> np.ndarray:
        if not np.iscomplexobj(value):
            try:
                pairs = np.array(value, dtype=np.float64)
            except (TypeError, ValueError):
                raise ValueError("Expected complex numbers or [re, im] pairs")
            if pairs.ndim == 2 and pairs.shape[1] == 2:
                array = pairs[:, 0] + 1j * pairs[:, 1]
            elif pairs.ndim == 1 and pairs.size == 0:
                array = np.zeros(0, dtype=np.complex128)
            else:
                raise ValueError("Expected complex numbers or [re, im] pairs")
        else:
            array = np.array(value, dtype=np.complex128)
        if array.ndim != 1:
            raise ValueError("Expected a one-dimensional array")
        array.flags.writeable = False
        return array


FloatArray = Annotated[np.ndarray, FloatArrayAnnotation]
ComplexArray = Annotated[np.ndarray, ComplexArrayAnnotation]
NumericArray = Union[FloatArray, ComplexArray]
