import numpy as np
import pytest
from pydantic import BaseModel, ValidationError

from debiased_polyfit.fields import ComplexArray, FloatArray, NumericArray


class Samples(BaseModel):
    values: FloatArray


class Phases(BaseModel):
    values: ComplexArray


class Coefficients(BaseModel):
    values: NumericArray


class TestFloatArray:
    def test_validation(self):
        samples = Samples(values=[1, 2.5, -3])
        assert samples.values.dtype == np.float64
        assert [1.0, 2.5, -3.0] == samples.values.tolist()

        with pytest.raises(ValidationError):
            Samples(values="lala")
        with pytest.raises(ValidationError):
            Samples(values=[[1.0, 2.0]])
        with pytest.raises(ValidationError):
            Samples(values=np.array([1j]))

    def test_is_read_only_copy(self):
        source = np.array([1.0, 2.0])
        samples = Samples(values=source)
        source[0] = 5.0
        assert 1.0 == samples.values[0]
        with pytest.raises(ValueError):
            samples.values[0] = 3.0

    def test_serialize(self):
        samples = Samples(values=[0.1, 2.0])
        assert '{"values":[0.1,2.0]}' == samples.model_dump_json()
        assert samples.values.tolist() == (
            Samples.model_validate_json(samples.model_dump_json()).values.tolist()
        )

    def test_modify_schema(self):
        schema = Samples.model_json_schema()
        assert {"type": "array", "items": {"type": "number"}} == {
            key: schema["properties"]["values"][key] for key in ("type", "items")
        }


class TestComplexArray:
    def test_validation(self):
        assert [1j, 2.0] == Phases(values=[1j, 2.0]).values.tolist()
        assert [1 + 2j, -1j] == Phases(values=[[1, 2], [0, -1]]).values.tolist()
        assert 0 == len(Phases(values=[]).values)

        with pytest.raises(ValidationError):
            Phases(values=[1.0, 2.0])
        with pytest.raises(ValidationError):
            Phases(values=[[1.0, 2.0, 3.0]])

    def test_serialize(self):
        phases = Phases(values=[1 + 0.5j])
        assert '{"values":[[1.0,0.5]]}' == phases.model_dump_json()
        restored = Phases.model_validate_json(phases.model_dump_json())
        assert [1 + 0.5j] == restored.values.tolist()

    def test_modify_schema(self):
        schema = Phases.model_json_schema()
        assert "array" == schema["properties"]["values"]["type"]


class TestNumericArray:
    def test_real(self):
        coefficients = Coefficients(values=[0.5, -1.0])
        assert not np.iscomplexobj(coefficients.values)
        assert {"values": [0.5, -1.0]} == coefficients.model_dump()
        assert '{"values":[0.5,-1.0]}' == coefficients.model_dump_json()

    def test_complex_keeps_imaginary_part(self):
        coefficients = Coefficients(values=[0.25 - 0.5j, 2.0])
        assert np.iscomplexobj(coefficients.values)
        assert {"values": [[0.25, -0.5], [2.0, 0.0]]} == coefficients.model_dump()
        assert '{"values":[[0.25,-0.5],[2.0,0.0]]}' == (
            coefficients.model_dump_json()
        )

    @pytest.mark.parametrize("values", [[0.1, 1 / 3], [0.1 + 1j / 3, -2j]])
    def test_json_round_trip(self, values):
        coefficients = Coefficients(values=values)
        restored = Coefficients.model_validate_json(coefficients.model_dump_json())
        assert coefficients.values.dtype == restored.values.dtype
        assert coefficients.values.tolist() == restored.values.tolist()

    def test_python_round_trip(self):
        coefficients = Coefficients(values=[1j, 1.0])
        restored = Coefficients.model_validate(coefficients.model_dump())
        assert [1j, 1.0] == restored.values.tolist()
